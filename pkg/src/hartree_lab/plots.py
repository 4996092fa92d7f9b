"""Figures for the ``report`` subcommand (rendered to files with the Agg backend)."""

from __future__ import annotations

import re
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_") or "figure"


def render(rows: Sequence[tuple[str, str, float, str, float]], out_dir: str | Path) -> list[Path]:
    """One figure per (source, kind): time series on linear axes, sweeps on log-log axes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups: dict[tuple[str, str], dict[str, list[tuple[float, float]]]] = defaultdict(lambda: defaultdict(list))
    for source, kind, x, name, value in rows:
        groups[(source, kind)][name].append((x, value))

    written = []
    for (source, kind), series in sorted(groups.items()):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for name, pts in sorted(series.items()):
            pts.sort()
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            if kind == "sweep":
                if not any(y > 0 for y in ys):
                    continue
                ax.loglog(xs, [y if y > 0 else float("nan") for y in ys], "o-", base=2, label=name)
            else:
                ax.plot(xs, ys, label=name)
        ax.set_xlabel("N" if kind == "sweep" else "t")
        ax.set_title(source)
        ax.grid(True, alpha=0.3)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize="small")
        path = out_dir / f"{_slug(source)}_{kind}.png"
        fig.tight_layout()
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written
