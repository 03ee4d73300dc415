"""Matplotlib figures for truncation profiles, rendered to files.

Used by the CLI report path: alongside the JSON-lines output it saves a
decay-profile figure (residual norms, partial stress mass, partial energy
against level).
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .infinite import TruncationReport

__all__ = ["render_profile_figure"]


def render_profile_figure(
    reports: Sequence[TruncationReport],
    path: str,
    title: str = "",
    pairings: Optional[dict[str, Sequence[float]]] = None,
) -> str:
    levels = [r.level for r in reports]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))

    ax = axes[0]
    ax.plot(levels, [max(r.residual_norm, 1e-300) for r in reports], "o-", label="dual norm")
    ax.plot(levels, [max(r.residual_sup, 1e-300) for r in reports], "s--", label="sup")
    if pairings:
        for name, series in pairings.items():
            ax.plot(levels, [max(abs(v), 1e-300) for v in series], ":", label=name)
    ax.set_yscale("log")
    ax.set_xlabel("level")
    ax.set_ylabel("residual")
    ax.legend(fontsize=8)
    ax.set_title("equilibrium residual")

    ax = axes[1]
    ax.plot(levels, [r.partial_abs_sum for r in reports], "o-")
    ax.set_xlabel("level")
    ax.set_ylabel("sum |stress|")
    ax.set_title("absolute stress mass")

    ax = axes[2]
    ax.plot(levels, [r.partial_energy for r in reports], "o-", label="signed")
    ax.plot(levels, [r.partial_abs_energy for r in reports], "s--", label="absolute")
    ax.set_xlabel("level")
    ax.set_ylabel("energy")
    ax.legend(fontsize=8)
    ax.set_title("stress energy")

    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
