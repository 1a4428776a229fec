"""Outage-curve figures rendered to files.

The CSV written by the command line is the data contract; figures are a
convenience view of the same curves.
"""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .outage import OutageCurve  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "axes.grid": True,
    "grid.linestyle": ":",
    "grid.linewidth": 0.5,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def figure_size(width_in: float = 4.5, aspect: float | None = None) -> tuple[float, float]:
    """Width and golden-ratio height in inches."""
    if aspect is None:
        aspect = (math.sqrt(5.0) - 1.0) / 2.0
    return width_in, width_in * aspect


def plot_outage_curves(curves: Sequence[OutageCurve], path, *, title: str | None = None,
                       floor: float = 1e-12) -> None:
    """Draw OP against transmit power on a log axis and save to ``path``.

    Analytic values are lines; Monte Carlo values are markers with their 95%
    interval. Points at or below ``floor`` (including MC zeros) are left out
    because a log axis cannot show them.
    """
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=figure_size())
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for i, curve in enumerate(curves):
            color = colors[i % len(colors)]
            p = curve.powers
            a = curve.analytic
            keep = np.isfinite(a) & (a > floor)
            if keep.any():
                ax.semilogy(p[keep], a[keep], "-", color=color, label=curve.curve_id)
            mc = np.array([np.nan if pt.mc_op is None else pt.mc_op for pt in curve.points])
            hw = np.array([np.nan if pt.mc_halfwidth is None else pt.mc_halfwidth for pt in curve.points])
            keep = np.isfinite(mc) & (mc > floor)
            if keep.any():
                lower = np.minimum(hw[keep], mc[keep] * (1 - 1e-9))
                ax.errorbar(p[keep], mc[keep], yerr=[lower, hw[keep]], fmt="o", mfc="none",
                            color=color, capsize=2,
                            label=None if np.isfinite(a).any() else curve.curve_id)
        ax.set_xlabel("Transmit power (dBW)")
        ax.set_ylabel("Outage probability")
        ax.set_ylim(top=1.5)
        if title:
            ax.set_title(title)
        ax.legend(loc="lower left", frameon=False)
        fig.savefig(path)
        plt.close(fig)
