"""Optional figures for table and sweep output.

matplotlib is imported only when a figure is requested; install the
``plot`` extra to enable it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .errors import ConfigError


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        raise ConfigError("plotting needs matplotlib; install the 'plot' extra") from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_series(
    x_label: str,
    xs: Sequence[float],
    series: dict[str, Sequence[float | None]],
    path: str | Path,
    title: str = "",
    reference: str | None = None,
) -> Path:
    """Draw each series against ``xs`` and save to ``path``.

    With ``reference`` naming one of the series, a second panel shows every
    other series minus the reference, which is where bounds differ visibly.
    """
    plt = _pyplot()
    panels = 2 if reference in series else 1
    fig, axes = plt.subplots(panels, 1, figsize=(7, 3.2 * panels), sharex=True, squeeze=False)
    top = axes[0][0]
    for name, ys in series.items():
        pts = [(x, y) for x, y in zip(xs, ys) if y is not None]
        if pts:
            top.plot(*zip(*pts), marker="o", ms=3, label=name)
    top.set_ylabel("price")
    top.legend(fontsize=8)
    if title:
        top.set_title(title)
    if panels == 2:
        low = axes[1][0]
        ref = series[reference]
        for name, ys in series.items():
            if name == reference:
                continue
            pts = [(x, y - r) for x, y, r in zip(xs, ys, ref) if y is not None and r is not None]
            if pts:
                low.plot(*zip(*pts), marker="o", ms=3, label=f"{name} - {reference}")
        low.axhline(0.0, color="grey", lw=0.5)
        low.set_ylabel(f"difference to {reference}")
        low.legend(fontsize=8)
    axes[-1][0].set_xlabel(x_label)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
