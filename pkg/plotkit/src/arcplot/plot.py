"""Score-versus-iteration comparison plots from simulator metrics CSVs.

Inputs are read-only; each labeled CSV becomes one line, an optional
vertical marker highlights a perturbation iteration, and the y axis is
clamped to the score range [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

REQUIRED_COLUMNS = ("iteration", "mode", "normalized_cost_score",
                    "supported_users", "mean_reward")

DEFAULT_SMOOTHING = 50


class SchemaError(ValueError):
    """Input CSV does not match the metrics schema."""


@dataclass(frozen=True)
class Series:
    label: str
    iterations: list[int]
    scores: list[float]


@dataclass
class PlotSpec:
    inputs: list[tuple[str, str]]            # (csv path, label)
    out_path: str
    marker: Optional[int] = None
    smoothing: int = DEFAULT_SMOOTHING
    show_raw: bool = False

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("need at least one labeled input CSV")
        if self.smoothing < 1:
            raise ValueError("smoothing window must be >= 1")


def load_series(path: str, label: str) -> Series:
    """Read one metrics CSV, validating the schema up front."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaError("%s: missing column(s) %s" % (path, ", ".join(missing)))
        iterations = []
        scores = []
        for row in reader:
            iterations.append(int(row["iteration"]))
            scores.append(float(row["normalized_cost_score"]))
    if not iterations:
        raise SchemaError("%s: no data rows" % path)
    return Series(label=label, iterations=iterations, scores=scores)


def smooth(values: Sequence[float], window: int) -> list[float]:
    """Centered moving average, edge-truncated, normalized by actual window."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if window == 1:
        return list(values)
    half = (window - 1) // 2
    n = len(values)
    out = []
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + (window - half))
        out.append(sum(values[lo:hi]) / (hi - lo))
    return out


def render(spec: PlotSpec) -> str:
    """Draw every labeled series (smoothed) and write the raster image."""
    series = [load_series(path, label) for path, label in spec.inputs]
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for s in series:
        smoothed = smooth(s.scores, spec.smoothing)
        line, = ax.plot(s.iterations, smoothed, label=s.label, linewidth=1.6)
        if spec.show_raw:
            ax.plot(s.iterations, s.scores, color=line.get_color(), alpha=0.18,
                    linewidth=0.7)
    if spec.marker is not None:
        ax.axvline(spec.marker, color="black", linestyle="--", linewidth=1.0,
                   label="perturbation")
    ax.set_xlabel("iteration")
    ax.set_ylabel("normalized cost score")
    ax.set_ylim(0.0, 1.0)
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=130)
    plt.close(fig)
    return spec.out_path
