"""Atomic CSV/JSON writers and figure rendering for the CLI report path.

All delimited output is written with 17 significant digits so identical runs
produce byte-identical files; files are written to a temporary name and
renamed into place.  Figures are rendered to PNG next to the data they plot.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = ["write_csv", "write_json", "write_text", "render_figure"]

_FMT = "%.17g"


def _atomic_write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(path, text: str):
    _atomic_write(Path(path), text.encode())


def write_csv(path, header: Sequence[str], columns: Sequence[np.ndarray]):
    cols = [np.asarray(c) for c in columns]
    n = cols[0].shape[0]
    if any(c.shape[0] != n for c in cols):
        raise ValueError("all columns must share a length")
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(_FMT % float(c[i]) for c in cols))
    write_text(path, "\n".join(lines) + "\n")


def write_json(path, doc):
    write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def render_figure(path, curves, xlabel: str, ylabel: str, logx=True, logy=True, title=None):
    """Render labelled (x, y) curves to a PNG file.

    curves: iterable of (label, x, y).  Nonpositive values are masked away on
    log axes instead of erroring.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, x, y in curves:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if logy:
            mask = y > 0
            x, y = x[mask], y[mask]
        ax.plot(x, y, label=label, linewidth=1.2)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(curves) > 1:
        ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
