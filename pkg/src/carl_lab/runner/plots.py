"""Learning-curve data files and SVG renderings.

The CSV files are the contract; the SVG is drawn with matplotlib when it is
installed and skipped otherwise.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .summary import learning_curves, read_results


def _render_svg(exp: str, curve: list[tuple[str, int, float, float, int]], target: Path) -> bool:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return False
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for region in sorted({r[0] for r in curve}):
        pts = [r for r in curve if r[0] == region]
        steps = [p[1] for p in pts]
        mean = [p[2] for p in pts]
        lo = [p[2] - p[3] for p in pts]
        hi = [p[2] + p[3] for p in pts]
        ax.plot(steps, mean, label=region)
        ax.fill_between(steps, lo, hi, alpha=0.2)
    ax.set_xlabel("step")
    ax.set_ylabel("return")
    ax.set_title(exp, fontsize=8)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(target, format="svg", metadata={"Date": None})
    plt.close(fig)
    return True


def emit_plotdata(path: str | Path, out_dir: str | Path | None = None, svg: bool = True) -> list[Path]:
    """One ``<experiment>.curve.csv`` (plus ``.svg``) per experiment; returns the CSV paths."""
    path = Path(path)
    out = Path(out_dir) if out_dir is not None else (path if path.is_dir() else path.parent) / "plots"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for exp, curve in learning_curves(read_results(path)).items():
        target = out / f"{exp}.curve.csv"
        with open(target, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["region", "step", "mean", "sd", "n_seeds"])
            for region, step, mean, sd, n in curve:
                w.writerow([region, step, repr(mean), repr(sd), n])
        written.append(target)
        if svg:
            _render_svg(exp, curve, out / f"{exp}.svg")
    return written
