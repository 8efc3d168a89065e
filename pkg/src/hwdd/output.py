"""Result files: CSV tables, JSON provenance and static SVG line plots."""
from __future__ import annotations

import csv
import io
import json
import math
import platform
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, kernels
from .decoupling_analysis import ScalingRun
from .simulator import ExperimentResult

CSV_HEADER = ("time_us", "fidelity_mean", "fidelity_stderr", "label", "sequence", "d", "seed")
SCALING_HEADER = ("tau_us", "infidelity", "d", "sequence", "seed")


def fmt(x: float) -> str:
    """17 significant digits: parses back to the identical double."""
    return "%.17g" % x


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _prepare_dir(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _provenance() -> dict:
    return {"library": "hwdd", "version": __version__, "kernel_backend": kernels.BACKEND, "python": platform.python_version()}


# ----------------------------------------------------------------------------
# Fidelity experiments
# ----------------------------------------------------------------------------


def result_csv(result: ExperimentResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in result.curves:
        for t, m, s in zip(result.times, c.mean, c.stderr):
            w.writerow([fmt(t), fmt(m), fmt(s), c.label, c.sequence, result.d, result.seed])
    return buf.getvalue()


def read_result_csv(path) -> list[dict]:
    """Parse a ``result.csv`` back into typed rows."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("time_us", "fidelity_mean", "fidelity_stderr"):
            r[k] = float(r[k])
        r["d"] = int(r["d"])
        r["seed"] = int(r["seed"])
    return rows


def _complex_matrix(m: np.ndarray) -> dict:
    return {"real": np.real(m).tolist(), "imag": np.imag(m).tolist()}


def result_json(result: ExperimentResult) -> dict:
    extras = {}
    for key, val in result.extras.items():
        if key == "final_rho":
            extras[key] = {label: _complex_matrix(rho) for label, rho in val.items()}
        else:
            extras[key] = val
    return {
        "provenance": _provenance(),
        "experiment": result.experiment,
        "d": result.d,
        "seed": result.seed,
        "config": result.config,
        "times_us": [float(t) for t in result.times],
        "curves": [
            {"label": c.label, "sequence": c.sequence, "mean": [float(x) for x in c.mean], "stderr": [float(x) for x in c.stderr]}
            for c in result.curves
        ],
        "extras": extras,
    }


def emit_outputs(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """Write ``result.csv``, ``result.json`` and ``plot.svg`` into ``out_dir``."""
    if len(result.times) == 0:
        raise ValueError("refusing to write results for an empty time grid")
    if not result.curves:
        raise ValueError("result has no curves")
    out = _prepare_dir(out_dir)
    paths = {"csv": out / "result.csv", "json": out / "result.json", "svg": out / "plot.svg"}
    _write(paths["csv"], result_csv(result))
    _write(paths["json"], json.dumps(result_json(result), indent=2) + "\n")
    series = [(f"{c.label} [{c.sequence}]" if _ambiguous(result) else c.label, result.times, c.mean) for c in result.curves]
    _write(paths["svg"], line_plot(series, xlabel="time (us)", ylabel="fidelity", title=f"{result.experiment}, d={result.d}"))
    return paths


def _ambiguous(result: ExperimentResult) -> bool:
    labels = [c.label for c in result.curves]
    return len(set(labels)) != len(labels)


# ----------------------------------------------------------------------------
# Scaling sweeps
# ----------------------------------------------------------------------------


def scaling_csv(runs: Sequence[ScalingRun], seed: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCALING_HEADER)
    for r in runs:
        for t, f in zip(r.result.tau_values, r.result.infidelities):
            w.writerow([fmt(t), fmt(f), r.d, r.sequence, seed])
    return buf.getvalue()


def scaling_json(runs: Sequence[ScalingRun], seed: int, config: dict) -> dict:
    return {
        "provenance": _provenance(),
        "experiment": "scaling",
        "seed": seed,
        "config": config,
        "results": [{"d": r.d, "sequence": r.sequence, **r.result.to_json()} for r in runs],
    }


def emit_scaling(runs: Sequence[ScalingRun], out_dir, seed: int, config: dict) -> dict[str, Path]:
    if not runs:
        raise ValueError("no scaling results to write")
    out = _prepare_dir(out_dir)
    paths = {"csv": out / "result.csv", "json": out / "result.json", "svg": out / "plot.svg"}
    _write(paths["csv"], scaling_csv(runs, seed))
    _write(paths["json"], json.dumps(scaling_json(runs, seed, config), indent=2) + "\n")
    series, notes = [], []
    for r in runs:
        pts = [(t, f) for t, f in zip(r.result.tau_values, r.result.infidelities) if f > 0]
        series.append((f"d={r.d} {r.sequence}", [p[0] for p in pts], [p[1] for p in pts]))
        notes.append(f"slope {r.result.slope:.2f}")
    _write(paths["svg"], line_plot(series, "tau (us)", "infidelity", "infidelity scaling", logx=True, logy=True, notes=notes))
    return paths


# ----------------------------------------------------------------------------
# SVG
# ----------------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
_W, _H = 720, 460
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 230, 40, 55


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        return [10.0**k for k in range(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1)]
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / 5)) if span > 0 else 1.0
    for m in (1, 2, 5, 10):
        if span / (step * m) <= 6:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def line_plot(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    xlabel: str,
    ylabel: str,
    title: str = "",
    logx: bool = False,
    logy: bool = False,
    notes: Sequence[str] | None = None,
) -> str:
    """Render line series as a standalone SVG document with a legend.

    ``notes`` adds one extra legend line per series, e.g. a fitted slope.
    Non-positive values are dropped from log axes.
    """
    tx = (lambda v: math.log10(v)) if logx else float
    ty = (lambda v: math.log10(v)) if logy else float
    cleaned = []
    for label, xs, ys in series:
        pts = [(tx(x), ty(y)) for x, y in zip(xs, ys) if (not logx or x > 0) and (not logy or y > 0) and math.isfinite(y)]
        cleaned.append((label, pts))
    allx = [p[0] for _, pts in cleaned for p in pts] or [0.0, 1.0]
    ally = [p[1] for _, pts in cleaned for p in pts] or [0.0, 1.0]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if not logy and y0 >= 0 and y1 <= 1:
        y0, y1 = 0.0, 1.0
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(x):
        return _LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return _TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{_TOP - 14}" text-anchor="middle" font-size="14">{_esc(title)}</text>')
    for v in _ticks(x0, x1, logx):
        xv = math.log10(v) if logx else v
        lab = f"1e{round(xv)}" if logx else f"{v:g}"
        out.append(f'<line x1="{px(xv):.2f}" y1="{_TOP + ph}" x2="{px(xv):.2f}" y2="{_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(xv):.2f}" y="{_TOP + ph + 19}" text-anchor="middle">{lab}</text>')
    for v in _ticks(y0, y1, logy):
        yv = math.log10(v) if logy else v
        lab = f"1e{round(yv)}" if logy else f"{v:g}"
        out.append(f'<line x1="{_LEFT - 5}" y1="{py(yv):.2f}" x2="{_LEFT}" y2="{py(yv):.2f}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{py(yv) + 4:.2f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{_H - 14}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{_TOP + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 18 {_TOP + ph / 2:.1f})">{_esc(ylabel)}</text>'
    )

    ly = _TOP + 8
    for i, (label, pts) in enumerate(cleaned):
        color = _COLORS[i % len(_COLORS)]
        if pts:
            path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.6"/>')
            for x, y in pts:
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.2" fill="{color}"/>')
        lx = _LEFT + pw + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        text = label if not notes else f"{label} ({notes[i]})"
        out.append(f'<text x="{lx + 28}" y="{ly + 4}">{_esc(text)}</text>')
        ly += 17
    out.append("</svg>")
    return "\n".join(out) + "\n"
