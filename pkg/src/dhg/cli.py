"""Command line front end.

Exit codes: 0 success, 1 acceptance failure, 2 configuration error,
3 mathematical degeneracy.  Errors print a JSON diagnostic on stderr.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import darboux as db
from . import io
from . import polygon as pg
from . import spectral as sp
from . import verify
from .errors import ConfigError, DhgError, EmptyKernel, NotAPolygon
from .holo import Immersion, induced_structure
from .instances import random_immersion, random_polygon
from .mesh import RegularTorus, adapted_basis, derive, fundamental_domain, thin_torus
from .quatlin import (
    J, affine_coordinate, from_affine, hpoint_distance, hpoint_normalize, qmul, qvec_to_c,
)

SNAP_TOL = 1e-6
CONSTANT_TOL = 1e-9


@dataclass
class RunConfig:
    subcommand: str
    out_dir: Path
    seed: int = 42
    tol: float = None
    gamma: tuple = None
    eta: tuple = None
    thin: int = None
    inputs: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, args):
        skip = {"command", "out_dir", "seed", "tol", "gamma", "eta", "thin",
                "immersion", "input", "func"}
        opts = {k: v for k, v in vars(args).items() if k not in skip}
        inputs = {k: getattr(args, k) for k in ("immersion", "input") if getattr(args, k, None)}
        return cls(args.command, Path(args.out_dir), args.seed, args.tol,
                   tuple(args.gamma) if getattr(args, "gamma", None) else None,
                   tuple(args.eta) if getattr(args, "eta", None) else None,
                   getattr(args, "thin", None), inputs, opts)

    def rng(self):
        return np.random.default_rng(self.seed)

    def torus(self):
        if self.thin is not None:
            if self.gamma or self.eta:
                raise ConfigError("--thin excludes --gamma/--eta")
            return thin_torus(self.thin)
        if self.gamma is None or self.eta is None:
            raise ConfigError("a torus needs --gamma and --eta, or --thin")
        return RegularTorus((self.gamma, self.eta))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit(ConfigError(message))
        sys.exit(2)


def _emit(err):
    print(json.dumps(io.jsonable(err.diagnostic()), sort_keys=True), file=sys.stderr)


def _complex(text):
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text}") from None


def _load_immersion(cfg, torus, rng):
    path = cfg.inputs.get("immersion")
    if path is None:
        return random_immersion(torus, rng, complex_only=cfg.options.get("complex", False))
    pts = io.parse_points(io.read_json(path))
    if len(pts) != torus.n_vertices:
        raise ConfigError("immersion size does not match the torus",
                          expected=torus.n_vertices, got=len(pts))
    return Immersion(pts)


class _InvariantFailure(DhgError):
    exit_code = 3


def _basis_json(torus):
    return {"gamma": list(torus.basis.gamma), "eta": list(torus.basis.eta)}


# ---------------------------------------------------------------------------
# mesh

def cmd_mesh(cfg):
    torus = cfg.torus()
    out = cfg.out_dir
    io.write_csv(out / "index_table.csv", ["kind", "index", "x", "y"], torus.index_table())
    tri = torus.triangulation()
    io.write_csv(out / "black.csv", ["black", "v0", "v1", "v2", "w0", "w1", "w2"],
                 [[b, *tri.black[b], *tri.black_adj[b, :, 0]] for b in range(len(tri.black))])
    io.write_csv(out / "white.csv", ["white", "v0", "v1", "v2", "b0", "b1", "b2"],
                 [[w, *tri.white[w], *tri.white_adj[w, :, 0]] for w in range(len(tri.white))])
    generations = []
    surface = torus
    for _ in range(3):
        surface = derive(surface)
        t = surface.triangulation
        generations.append({
            "role": surface.role, "n_vertices": t.n_vertices,
            "black": t.black, "white": t.white,
            "vertex_parent": surface.vertex_parent, "black_parent": surface.black_parent,
            "white_parent": surface.white_parent,
        })
    counts_equal = torus.n_vertices == len(torus.black) == len(torus.white)
    valence_ok = bool(np.all(tri.valences() == 6))
    report = {
        "basis": _basis_json(torus), "n_vertices": torus.n_vertices,
        "n_black": len(torus.black), "n_white": len(torus.white),
        "counts_equal": counts_equal, "valence_six": valence_ok,
        "adjacency_consistent": tri.check(),
        "third_derived_role": generations[-1]["role"],
        "derived": generations,
    }
    io.write_json(out / "mesh.json", report)
    if cfg.options.get("plot", True):
        from .plotting import plot_torus
        plot_torus(torus, out / "mesh.png")
    _say(cfg, f"{torus.n_vertices} vertices; tables in {out}")
    if not (counts_equal and valence_ok and report["adjacency_consistent"]):
        raise _InvariantFailure("mesh invariants violated")
    return 0


# ---------------------------------------------------------------------------
# spectrum

def _double_root_line(f, torus):
    """Closed-form double fiber root of the four-point torus with complex data."""
    if torus.n_vertices != 4:
        return None
    try:
        q = affine_coordinate(f.points)
    except ZeroDivisionError:
        return None
    if np.max(np.abs(q[:, 2:])) > 1e-12 * max(1.0, np.max(np.abs(q))):
        return None
    x = q[:, 0] + 1j * q[:, 1]
    den = (x[0] - x[1]) * (x[2] - x[3])
    return {"slope": (x[0] - x[2]) * (x[1] - x[3]) / den,
            "intercept": -(x[1] - x[2]) * (x[0] - x[3]) / den}


def cmd_spectrum(cfg):
    rng = cfg.rng()
    torus = cfg.torus()
    f = _load_immersion(cfg, torus, rng)
    hs = induced_structure(torus, f)
    fd = fundamental_domain(torus, adapted_basis(torus, cfg.options.get("direction", 0)))
    data = sp.char_poly(hs, fd, rng)
    generic = sp.genericity_check(hs, torus)
    splits, p1, p2 = sp.split_char_poly(sp.holonomy_poly(hs, fd))
    samples = sp.sample_spectrum(data, cfg.options.get("samples", 16), 1.0)
    report = {
        "basis": _basis_json(torus),
        "domain": {"gamma": list(fd.basis.gamma), "eta": list(fd.basis.eta),
                   "length": fd.n, "thickness": fd.m},
        "char_poly": data.to_json(), "rho_defect": data.rho_defect(),
        "ends": data.holonomies, "n_ends_all_directions": generic["n_ends"],
        "generic": generic["generic"], "genericity_witness": generic["witness"],
        "directions": generic["directions"], "splits": splits,
    }
    if splits:
        report["factors"] = [p1.to_json(), p2.to_json()]
    line = _double_root_line(f, torus)
    if line is not None:
        worst = max(data.relative_value(mu, line["slope"] * mu + line["intercept"])
                    for mu, _ in samples)
        report["double_root_line"] = dict(line, residual=worst)
    out = cfg.out_dir
    io.write_json(out / "spectrum.json", report)
    io.write_csv(out / "samples.csv", ["mu_re", "mu_im", "lambda_re", "lambda_im", "residual"],
                 [[m.real, m.imag, l.real, l.imag, data.relative_value(m, l)]
                  for m, l in samples])
    if cfg.options.get("plot", True):
        from .plotting import plot_spectrum
        plot_spectrum(samples, out / "spectrum.png", data.holonomies)
    _say(cfg, f"generic={generic['generic']} ends={generic['n_ends']} splits={splits}")
    return 0


# ---------------------------------------------------------------------------
# darboux

def snap_multiplier(hs, fd, mu, lam, tol=SNAP_TOL):
    """The eigenvalue of H(mu) nearest to lam, if it is within tol (relative)."""
    ev = np.linalg.eigvals(sp.holonomy_H(hs, fd, mu))
    if lam is None:
        return complex(ev[np.argmin(np.abs(np.abs(ev) - 1.0))])
    k = int(np.argmin(np.abs(ev - lam)))
    if abs(ev[k] - lam) > tol * max(1.0, abs(ev[k])):
        raise EmptyKernel("multiplier is not on the spectrum",
                          mu=complex(mu), requested=complex(lam), nearest=complex(ev[k]))
    return complex(ev[k])


def _transform_for(hs, fd, f, torus, mu, lam, tol):
    lam = snap_multiplier(hs, fd, mu, lam, tol)
    section = sp.eigen_section(hs, fd, mu, lam)
    prol = db.prolong(section, hs)
    ft = db.darboux_from_section(prol, f, torus.black)
    return ft, section, prol, lam


def _constant(prol):
    hat = hpoint_normalize(prol.hat)
    return float(np.max(hpoint_distance(hat, hat[:1]))) <= CONSTANT_TOL


def cmd_darboux(cfg):
    rng = cfg.rng()
    torus = cfg.torus()
    f = _load_immersion(cfg, torus, rng)
    hs = induced_structure(torus, f)
    fd = fundamental_domain(torus)
    snap = cfg.tol if cfg.tol is not None else SNAP_TOL
    mu = cfg.options.get("mu")
    lam = cfg.options.get("lam")
    if mu is None:
        mu, lam = sp.spectrum_points(hs, fd, rng, 1)[0]
    ft, section, prol, lam = _transform_for(hs, fd, f, torus, mu, lam, snap)
    tri = torus.triangulation()
    rep = db.verify_multiratio(tri, f.points, ft.points)
    devs = db.multiratio_deviations(tri, f.points, ft.points)
    warnings = []
    if _constant(prol):
        warnings.append("constant prolongation: the section comes from the linear system "
                        "and the transform is a single point")
    report = {"mu": complex(mu), "lambda": lam, "basis": _basis_json(torus),
              "prolongation_residual": prol.residual, "warnings": warnings, **rep}
    out = cfg.out_dir
    io.write_json(out / "transform.json", {"points": ft.points})
    bianchi = cfg.options.get("bianchi")
    if bianchi:
        mu2, lam2 = bianchi
        ft2, section2, _, lam2 = _transform_for(hs, fd, f, torus, mu2, lam2, snap)
        res = db.bianchi(torus, hs, section, section2)
        tri1 = derive(torus).triangulation
        report["bianchi"] = {
            "mu": complex(mu2), "lambda": lam2, **res.report,
            "vs_first": db.verify_multiratio(tri1, ft.points, res.points)["max_multiratio_dev"],
            "vs_second": db.verify_multiratio(tri1, ft2.points, res.points)["max_multiratio_dev"],
        }
        io.write_json(out / "transform_second.json", {"points": ft2.points})
        io.write_json(out / "bianchi.json", {"points": res.points})
    io.write_json(out / "darboux_report.json", report)
    if cfg.options.get("plot", True):
        from .plotting import plot_deviations
        plot_deviations(devs, out / "multiratio.png", "multi-ratio deviation")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    _say(cfg, f"max multi-ratio deviation {rep['max_multiratio_dev']:.3g}")
    return 0


# ---------------------------------------------------------------------------
# polygon

def _regular_polygon(n):
    z = np.exp(2j * np.pi * np.arange(n) / n)
    return from_affine(np.stack([z.real, z.imag, 0 * z.real, 0 * z.real], -1))


def _load_polygon(cfg, rng):
    if cfg.inputs.get("input"):
        return io.parse_points(io.read_json(cfg.inputs["input"]))
    if cfg.options.get("regular"):
        return _regular_polygon(cfg.options["regular"])
    return random_polygon(rng, cfg.options.get("n") or 5,
                          complex_only=cfg.options.get("complex", False))


def cmd_polygon(cfg):
    rng = cfg.rng()
    pts = _load_polygon(cfg, rng)
    curve = pg.DiscreteCurve(pts)
    if curve.n < 3:
        raise ConfigError("a closed polygon needs at least three points", n=curve.n)
    if not curve.is_polygon():
        raise NotAPolygon("three consecutive points must be mutually distinct",
                          pairs=curve.polygon_violations())
    pts = curve.points
    data = pg.polygon_spectral(pts)
    degree, top = pg.h_max(pts)
    sv = np.linalg.svd(top, compute_uv=False)
    h0 = pg.h_zero(pts)
    l1 = np.stack([qvec_to_c(pts[1]), qvec_to_c(qmul(pts[1], J.q))], axis=1)
    splits, p1, p2 = sp.split_char_poly(pg.holonomy_poly(pts), "lambda", "mu")
    report = {
        "n": curve.n, "char_poly": data.to_json(), "rho_defect": data.rho_defect(),
        "spectrum": pg.simple_spectrum_report(pts, rng),
        "h0_on_L1": float(np.max(np.abs(h0 @ l1)) / np.max(np.abs(h0))),
        "hmax_degree": degree,
        "hmax_nilpotent": bool(np.max(np.abs(top @ top)) <= 1e-12 * sv[0] ** 2),
        "hmax_invertible": bool(sv[-1] > 1e-6 * sv[0]),
        "splits": splits,
    }
    if splits:
        report["factors"] = [p1.to_json(), p2.to_json()]
    steps = cfg.options.get("steps", 0)
    lam = cfg.options.get("lam")
    out = cfg.out_dir
    if steps:
        if lam is None:
            lam = -1.0
        flow = pg.polygon_flow(pts, lam, steps, cfg.options.get("eigen_index", 0))
        closure = [_step_deviation(a, b, lam) for a, b in zip(flow[:-1], flow[1:])]
        base = data.normalized()
        drift = max(_padded(base, pg.polygon_spectral(p).normalized()) for p in flow[1:])
        report["flow"] = {"lambda": complex(lam), "steps": steps,
                          "max_step_cross_ratio_dev": max(closure),
                          "max_spectral_drift": drift}
        polylines = [pg.project_to_r3(affine_coordinate(p)) for p in flow]
        io.write_obj(out / "flow.obj", polylines)
        if cfg.options.get("plot", True):
            from .plotting import plot_polylines
            plot_polylines(polylines, out / "flow.png")
    io.write_json(out / "polygon.json", report)
    _say(cfg, f"n={curve.n} hmax degree {degree} splits={splits}")
    return 0


def _step_deviation(prev, nxt, lam):
    """Largest cross-ratio deviation over the quadrilaterals of one flow step.

    The quadrilateral joining the last and the first vertex is included, so
    this also measures closedness of the transform.
    """
    n = len(prev)
    return max(pg.curve_cross_ratio_check(prev[k], prev[(k + 1) % n], nxt[k],
                                          nxt[(k + 1) % n], lam) for k in range(n))


def _padded(a, b):
    shape = np.maximum(a.shape, b.shape)
    pad = lambda c: np.pad(c, [(0, shape[0] - c.shape[0]), (0, shape[1] - c.shape[1])])  # noqa: E731
    return float(np.max(np.abs(pad(a) - pad(b))))


# ---------------------------------------------------------------------------
# verify

def cmd_verify(cfg):
    selection = []
    for item in cfg.options.get("criteria") or []:
        selection.extend(s for s in item.split(",") if s)
    try:
        numbers = verify.resolve(selection)
    except KeyError as exc:
        raise ConfigError("unknown criterion", criterion=str(exc.args[0])) from None
    results = []
    for k in numbers:
        r = verify.run_criterion(k, cfg.seed, cfg.tol)
        print(r.line())
        results.append(r)
    payload = [{k: v for k, v in r.to_json().items() if k != "seconds"} for r in results]
    failed = [r.number for r in results if not r.passed]
    io.write_json(cfg.out_dir / "verify.json",
                  {"seed": cfg.seed, "tol": cfg.tol, "criteria": payload, "failed": failed})
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


# ---------------------------------------------------------------------------

def _say(cfg, text):
    if not cfg.options.get("quiet"):
        print(text)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--tol", type=float, default=None,
                        help="tolerance override (verify thresholds, multiplier snapping)")
    common.add_argument("--out-dir", default="dhg_out")
    common.add_argument("--no-plot", dest="plot", action="store_false")
    common.add_argument("--quiet", action="store_true")

    torus = argparse.ArgumentParser(add_help=False)
    torus.add_argument("--gamma", type=int, nargs=2, metavar=("X", "Y"))
    torus.add_argument("--eta", type=int, nargs=2, metavar=("X", "Y"))
    torus.add_argument("--thin", type=int)

    parser = _Parser(prog="dhg", description="Discrete holomorphic geometry toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mesh", parents=[common, torus], help="lattice tables")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("spectrum", parents=[common, torus], help="spectral curve of a torus")
    p.add_argument("--immersion", help="JSON vertex values (random when omitted)")
    p.add_argument("--complex", action="store_true", help="random values in CP^1")
    p.add_argument("--direction", type=int, default=0, choices=(0, 1, 2))
    p.add_argument("--samples", type=int, default=16)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("darboux", parents=[common, torus], help="Darboux transforms")
    p.add_argument("--immersion")
    p.add_argument("--complex", action="store_true")
    p.add_argument("--mu", type=_complex)
    p.add_argument("--lambda", dest="lam", type=_complex)
    p.add_argument("--bianchi", type=_complex, nargs=2, metavar=("MU", "LAMBDA"))
    p.set_defaults(func=cmd_darboux)

    p = sub.add_parser("polygon", parents=[common], help="closed polygons and their flow")
    p.add_argument("--input", help="JSON polygon (random pentagon when omitted)")
    p.add_argument("--regular", type=int, help="regular planar n-gon")
    p.add_argument("--n", type=int)
    p.add_argument("--complex", action="store_true")
    p.add_argument("--lambda", dest="lam", type=_complex)
    p.add_argument("--steps", type=int, default=0)
    p.add_argument("--eigen-index", type=int, default=0)
    p.set_defaults(func=cmd_polygon)

    p = sub.add_parser("verify", parents=[common], help="acceptance suite")
    p.add_argument("--criteria", nargs="*", help="numbers or names, e.g. multiratio 7")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
        if cfg.subcommand == "darboux" and cfg.options.get("mu") is None \
                and cfg.options.get("lam") is not None:
            raise ConfigError("--lambda needs --mu")
        return args.func(cfg)
    except DhgError as err:
        _emit(err)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
