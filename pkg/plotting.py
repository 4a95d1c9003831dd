# plotting.py
"""Optional SVG figures. matplotlib is imported lazily; a missing backend only logs a warning."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from bernoulli_model import LevelSet, PhasePoint, Regime

log = logging.getLogger("orbitgap.plotting")


def _pyplot():
    try:
        import matplotlib

        matplotlib.use("Agg")
        # fixed ids so identical figures give identical files
        matplotlib.rcParams["svg.hashsalt"] = "orbitgap"
        import matplotlib.pyplot as plt
    except Exception as e:
        log.warning("plotting unavailable, skipping SVG: %s", e)
        return None
    return plt


def _save(fig, path: str) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def phase_diagram_svg(points: Sequence[PhasePoint], resolution: int, path: str,
                      boundary: Optional[List[Tuple[float, float]]] = None,
                      contours: Optional[Sequence[LevelSet]] = None) -> bool:
    """Heat map of the limit exponent with the annealed/quenched regions outlined and optional level sets."""
    plt = _pyplot()
    if plt is None:
        return False
    values = np.array([p.exponent for p in points]).reshape(resolution, resolution)
    quenched = np.array([p.regime is Regime.QUENCHED for p in points], dtype=float).reshape(resolution, resolution)
    centres = (np.arange(resolution) + 0.5) / resolution
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    # rows are pA, so transpose to put pA on the horizontal axis
    mesh = ax.pcolormesh(centres, centres, np.log(values.T), shading="nearest", cmap="viridis")
    ax.contour(centres, centres, quenched.T, levels=[0.5], colors="white", linewidths=1.0)
    if boundary:
        bx, by = zip(*boundary)
        ax.plot(bx, by, ".", color="red", markersize=2)
    for level_set in contours or ():
        for segment in level_set.segments:
            sx, sy = zip(*segment)
            ax.plot(sx, sy, color="lightgrey", linewidth=0.7)
        if level_set.segments:
            lx, ly = level_set.segments[0][len(level_set.segments[0]) // 2]
            ax.annotate(f"{level_set.level:g}", (lx, ly), fontsize=6, color="lightgrey")
    fig.colorbar(mesh, ax=ax, label="log exponent")
    ax.set_xlabel("pA")
    ax.set_ylabel("pB")
    ax.set_title("annealed vs quenched regime")
    _save(fig, path)
    plt.close(fig)
    log.info("wrote %s", path)
    return True


def diagonal_scan_svg(points: Sequence[PhasePoint], c_pm: Tuple[float, float], path: str) -> bool:
    plt = _pyplot()
    if plt is None:
        return False
    pa = [p.params.pA for p in points]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(pa, [p.exponent for p in points], color="black", label="max(2/H2_an, 1/H2_qu)")
    ax.plot(pa, [2.0 / p.h2_an for p in points], "--", color="tab:blue", label="2/H2_an")
    ax.plot(pa, [1.0 / p.h2_qu for p in points], ":", color="tab:orange", label="1/H2_qu")
    for c in c_pm:
        ax.axvline(c, color="grey", linewidth=0.8)
    ax.set_yscale("log")
    ax.set_xlabel("pA (pB = 1 - pA)")
    ax.legend(loc="upper center", fontsize=8)
    _save(fig, path)
    plt.close(fig)
    log.info("wrote %s", path)
    return True
