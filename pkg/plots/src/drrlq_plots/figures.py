"""Render figures from drrlq benchmark and convergence CSV artifacts.

Every figure aggregates trials by the mean and shades the empirical
20th-80th percentile range. Radius sweeps use a logarithmic x axis.
Alongside each image a sidecar JSON records exactly the numbers that
were plotted, so downstream checks can verify the aggregation without
parsing pixels.

The renderer only reads the documented CSV schemas (see the primary
package's docs/formats.md); it never imports the solver.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = (
    "cost_vs_radius",
    "cost_vs_rho",
    "regret_vs_rho",
    "relgap_trace",
    "time_vs_T",
)

IMAGE_SUFFIXES = (".png", ".svg")

# metric column plotted by each benchmark-based kind
_BENCH_METRIC = {
    "cost_vs_radius": "expected_cost",
    "cost_vs_rho": "expected_cost",
    "regret_vs_rho": "exante_regret",
}

_BENCH_COLUMNS = ("controller", "radius", "rho", "trial")

_AXIS_LABELS = {
    "cost_vs_radius": ("covariance radius", "expected cost"),
    "cost_vs_rho": ("disturbance correlation", "expected cost"),
    "regret_vs_rho": ("disturbance correlation", "ex-ante regret"),
    "relgap_trace": ("iteration", "relative duality gap"),
    "time_vs_T": ("horizon", "wall time [ms]"),
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render.

    csv_path: input artifact (benchmark.csv, convergence_trace.csv,
        convergence_times.csv, or a solve trace.csv depending on kind).
    kind: one of FIGURE_KINDS.
    out_path: image file to write; .png or .svg. The sidecar JSON goes
        next to it with the suffix replaced by .json.
    controllers: keep only these controller names (benchmark kinds
        only; None keeps all).
    rho: keep only rows at this correlation value (cost_vs_radius
        only; required when the CSV mixes several values).
    """

    csv_path: str | Path
    kind: str
    out_path: str | Path
    controllers: tuple[str, ...] | None = None
    rho: float | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(
                f"figure kind {self.kind!r} not recognized; "
                f"expected one of {', '.join(FIGURE_KINDS)}")
        suffix = Path(self.out_path).suffix.lower()
        if suffix not in IMAGE_SUFFIXES:
            raise ValueError(
                f"output suffix {suffix!r} not supported; "
                f"expected one of {', '.join(IMAGE_SUFFIXES)}")
        if self.controllers is not None:
            object.__setattr__(self, "controllers",
                               tuple(self.controllers))
            if self.kind not in _BENCH_METRIC:
                raise ValueError(
                    f"controller filter does not apply to {self.kind!r}")
        if self.rho is not None and self.kind != "cost_vs_radius":
            raise ValueError(
                f"rho filter does not apply to {self.kind!r}")

    @property
    def sidecar_path(self) -> Path:
        return Path(self.out_path).with_suffix(".json")


@dataclass
class Series:
    """One plotted line: center values plus optional percentile band.

    x is None for a flat baseline (drawn as a horizontal line); radius
    records the per-point radius chosen for controllers that were swept
    over a radius grid.
    """

    label: str
    x: list[float] | None
    y: list[float]
    p20: list[float] | None = None
    p80: list[float] | None = None
    radius: list[float] | None = None
    n_trials: int | None = None

    def as_dict(self) -> dict:
        return {"label": self.label, "x": self.x, "y": self.y,
                "p20": self.p20, "p80": self.p80, "radius": self.radius,
                "n_trials": self.n_trials}


def _read_rows(path: Path) -> tuple[list[str], list[dict]]:
    if not path.exists():
        raise FileNotFoundError(f"input CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = list(reader.fieldnames or ())
        rows = list(reader)
    if not rows:
        raise ValueError(f"no data rows in {path}")
    return header, rows


def _require_columns(header: list[str], needed: tuple[str, ...],
                     path: Path) -> None:
    missing = sorted(set(needed) - set(header))
    if missing:
        raise ValueError(
            f"{path} is missing required columns: {', '.join(missing)}")


def _stats(values: list[float]) -> tuple[float, float, float]:
    arr = np.asarray(values, dtype=float)
    p20, p80 = np.percentile(arr, [20.0, 80.0])
    return float(arr.mean()), float(p20), float(p80)


def _filter_controllers(rows: list[dict],
                        wanted: tuple[str, ...] | None) -> list[dict]:
    if wanted is None:
        return rows
    have = sorted({row["controller"] for row in rows})
    unknown = sorted(set(wanted) - set(have))
    if unknown:
        raise ValueError(
            f"controller filter names {', '.join(unknown)} not in the "
            f"input (available: {', '.join(have)})")
    return [row for row in rows if row["controller"] in wanted]


def _controller_order(rows: list[dict]) -> list[str]:
    # first-appearance order keeps baselines ahead of the swept controllers
    seen: dict[str, None] = {}
    for row in rows:
        seen.setdefault(row["controller"], None)
    return list(seen)


def _series_vs_radius(rows: list[dict], metric: str,
                      rho: float | None) -> list[Series]:
    values = sorted({float(r["rho"]) for r in rows})
    if rho is not None:
        if not any(math.isclose(v, rho) for v in values):
            raise ValueError(
                f"rho={rho} not present in the input "
                f"(available: {values})")
        rows = [r for r in rows if math.isclose(float(r["rho"]), rho)]
    elif len(values) > 1:
        raise ValueError(
            f"input mixes several rho values {values}; "
            "set FigureSpec.rho to pick one")

    out = []
    for name in _controller_order(rows):
        sub = [r for r in rows if r["controller"] == name]
        if sub[0]["radius"] == "":
            # baseline: one value per trial, radius not applicable
            mean, p20, p80 = _stats([float(r[metric]) for r in sub])
            out.append(Series(name, None, [mean], [p20], [p80],
                              n_trials=len(sub)))
            continue
        radii = sorted({float(r["radius"]) for r in sub})
        ys, lo, hi, counts = [], [], [], set()
        for rad in radii:
            vals = [float(r[metric]) for r in sub
                    if float(r["radius"]) == rad]
            counts.add(len(vals))
            mean, p20, p80 = _stats(vals)
            ys.append(mean)
            lo.append(p20)
            hi.append(p80)
        out.append(Series(name, radii, ys, lo, hi,
                          n_trials=max(counts)))
    return out


def _series_vs_rho(rows: list[dict], metric: str) -> list[Series]:
    rhos = sorted({float(r["rho"]) for r in rows})
    out = []
    for name in _controller_order(rows):
        sub = [r for r in rows if r["controller"] == name]
        swept = sub[0]["radius"] != ""
        ys, lo, hi, picked, counts = [], [], [], [], set()
        for rho in rhos:
            cell = [r for r in sub if float(r["rho"]) == rho]
            if swept:
                # oracle radius: the grid point with the best trial mean
                by_rad: dict[float, list[float]] = {}
                for r in cell:
                    by_rad.setdefault(float(r["radius"]), []).append(
                        float(r[metric]))
                best = min(by_rad, key=lambda rad: np.mean(by_rad[rad]))
                vals = by_rad[best]
                picked.append(best)
            else:
                vals = [float(r[metric]) for r in cell]
            counts.add(len(vals))
            mean, p20, p80 = _stats(vals)
            ys.append(mean)
            lo.append(p20)
            hi.append(p80)
        out.append(Series(name, rhos, ys, lo, hi,
                          radius=picked if swept else None,
                          n_trials=max(counts)))
    return out


def _series_relgap(rows: list[dict]) -> list[Series]:
    grouped = "horizon" in rows[0]
    out = []
    if grouped:
        keys: dict[tuple[int, int], None] = {}
        for row in rows:
            keys.setdefault((int(row["horizon"]), int(row["trial"])), None)
        trials = {t for _, t in keys}
        for horizon, trial in keys:
            sub = [r for r in rows if int(r["horizon"]) == horizon
                   and int(r["trial"]) == trial]
            label = (f"T={horizon}" if len(trials) == 1
                     else f"T={horizon} trial {trial}")
            out.append(Series(label,
                              [float(r["iteration"]) for r in sub],
                              [float(r["relgap_best"]) for r in sub]))
    else:
        out.append(Series("solve",
                          [float(r["iteration"]) for r in rows],
                          [float(r["relgap_best"]) for r in rows]))
    return out


def _series_times(rows: list[dict]) -> list[Series]:
    horizons = sorted({int(r["horizon"]) for r in rows})
    ys, lo, hi, counts = [], [], [], set()
    for horizon in horizons:
        vals = [float(r["wall_ms"]) for r in rows
                if int(r["horizon"]) == horizon]
        counts.add(len(vals))
        mean, p20, p80 = _stats(vals)
        ys.append(mean)
        lo.append(p20)
        hi.append(p80)
    return [Series("wall time", [float(h) for h in horizons], ys, lo, hi,
                   n_trials=max(counts))]


def build_series(spec: FigureSpec) -> list[Series]:
    """Aggregate the input CSV into the series the figure will show."""
    path = Path(spec.csv_path)
    header, rows = _read_rows(path)
    if spec.kind in _BENCH_METRIC:
        metric = _BENCH_METRIC[spec.kind]
        _require_columns(header, _BENCH_COLUMNS + (metric,), path)
        rows = _filter_controllers(rows, spec.controllers)
        if spec.kind == "cost_vs_radius":
            return _series_vs_radius(rows, metric, spec.rho)
        return _series_vs_rho(rows, metric)
    if spec.kind == "relgap_trace":
        _require_columns(header, ("iteration", "relgap_best"), path)
        return _series_relgap(rows)
    _require_columns(header, ("horizon", "trial", "wall_ms"), path)
    return _series_times(rows)


def _draw(spec: FigureSpec, series: list[Series]) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for idx, s in enumerate(series):
        color = f"C{idx % 10}"
        if s.x is None:
            ax.axhline(s.y[0], color=color, linestyle="--", label=s.label)
            if s.p20 is not None:
                ax.axhspan(s.p20[0], s.p80[0], color=color, alpha=0.12)
            continue
        ax.plot(s.x, s.y, color=color, marker="o", markersize=3,
                label=s.label)
        if s.p20 is not None:
            ax.fill_between(s.x, s.p20, s.p80, color=color, alpha=0.22)
    xlabel, ylabel = _AXIS_LABELS[spec.kind]
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if spec.kind == "cost_vs_radius":
        ax.set_xscale("log")
    if spec.kind == "relgap_trace":
        # log scale only if every value is positive (a gap of exactly
        # zero happens on degenerate one-iteration solves)
        if all(v > 0.0 for s in series for v in s.y):
            ax.set_yscale("log")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    # a fixed Date keeps the SVG output byte-stable across runs
    fig.savefig(spec.out_path, dpi=150, metadata={"Date": None})
    plt.close(fig)


def render(spec: FigureSpec) -> Path:
    """Render one figure and its sidecar JSON; returns the image path."""
    series = build_series(spec)
    _draw(spec, series)
    xlabel, ylabel = _AXIS_LABELS[spec.kind]
    sidecar = {
        "kind": spec.kind,
        "input": Path(spec.csv_path).name,
        "metric": _BENCH_METRIC.get(spec.kind),
        "controllers": (list(spec.controllers)
                        if spec.controllers is not None else None),
        "rho": spec.rho,
        "x_label": xlabel,
        "y_label": ylabel,
        "aggregation": {"center": "mean", "band": [20.0, 80.0]},
        "series": [s.as_dict() for s in series],
    }
    with open(spec.sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=1)
        fh.write("\n")
    return Path(spec.out_path)
