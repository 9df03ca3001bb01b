"""Report figures, rendered off-screen to files."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .mesh import embed  # noqa: E402


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_torus(torus, path):
    """Fundamental cell of a regular torus with black triangles shaded."""
    fig, ax = plt.subplots(figsize=(5, 5))
    coords = np.asarray(torus.vertex_coords)
    for x, y in coords:
        tri = embed(np.array([(x, y), (x + 1, y), (x, y + 1)], dtype=float))
        ax.fill(tri[:, 0], tri[:, 1], color="0.25", alpha=0.8, lw=0.5, ec="k")
        wt = embed(np.array([(x + 1, y), (x + 1, y + 1), (x, y + 1)], dtype=float))
        ax.fill(wt[:, 0], wt[:, 1], color="white", lw=0.5, ec="k")
    pos = embed(coords.astype(float))
    for k, (px, py) in enumerate(pos):
        ax.annotate(str(k), (px, py), fontsize=7, color="tab:red",
                    ha="center", va="center")
    ax.set_aspect("equal")
    ax.set_axis_off()
    ax.set_title(f"{torus.n_vertices} vertices")
    return _save(fig, path)


def plot_spectrum(samples, path, holonomies=()):
    """Fiber roots over sampled base values and the ends on the base axis."""
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 4))
    if samples:
        s = np.array([a for a, _ in samples])
        t = np.array([b for _, b in samples])
        ax0.scatter(s.real, s.imag, s=6, color="tab:blue")
        ax1.scatter(t.real, t.imag, s=6, color="tab:orange")
    h = np.asarray(list(holonomies), dtype=complex)
    if len(h):
        ax0.scatter(h.real, h.imag, marker="x", color="tab:red", label="ends")
        ax0.legend(frameon=False)
    ax0.set_title("base samples")
    ax1.set_title("fiber roots")
    for ax in (ax0, ax1):
        ax.set_aspect("equal", adjustable="datalim")
        ax.axhline(0, color="0.8", lw=0.5)
        ax.axvline(0, color="0.8", lw=0.5)
    return _save(fig, path)


def plot_polylines(polylines, path, closed=True):
    """First two coordinates of each polyline, coloured by time step."""
    fig, ax = plt.subplots(figsize=(5, 5))
    cmap = plt.get_cmap("viridis")
    count = max(len(polylines) - 1, 1)
    for k, pts in enumerate(polylines):
        pts = np.asarray(pts)
        if closed:
            pts = np.vstack([pts, pts[:1]])
        ax.plot(pts[:, 0], pts[:, 1], color=cmap(k / count), lw=1)
    ax.set_aspect("equal", adjustable="datalim")
    return _save(fig, path)


def plot_deviations(values, path, title=""):
    """Log-scale histogram of per-triangle deviations."""
    fig, ax = plt.subplots(figsize=(5, 3))
    v = np.asarray(values, dtype=float)
    v = np.maximum(v, 1e-18)
    ax.hist(np.log10(v), bins=20, color="tab:gray")
    ax.set_xlabel("log10 deviation")
    ax.set_title(title)
    return _save(fig, path)
