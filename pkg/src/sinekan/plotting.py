"""Minimal SVG line charts with a log-scaled y axis.

Charts are pure functions of their input series, so regenerating them from
the same CSV gives byte-identical files.
"""
from __future__ import annotations

import math
from collections import defaultdict
from html import escape
from pathlib import Path
from typing import Mapping, Sequence

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
WIDTH, HEIGHT = 480, 340
MARGIN = dict(left=70, right=150, top=36, bottom=50)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _log_ticks(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def _linear_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    step = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        if raw <= mult * step:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    ticks, t = [], start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def line_chart_svg(
    series: Mapping[str, Sequence[tuple[float, float]]],
    title: str,
    xlabel: str,
    ylabel: str,
    log_x: bool = False,
) -> str:
    """Render ``{label: [(x, y), ...]}`` as an SVG string; y is always log10-scaled."""
    pts = {k: [(x, y) for x, y in v if y > 0 and math.isfinite(y) and (x > 0 or not log_x)] for k, v in series.items()}
    xs = [x for v in pts.values() for x, _ in v]
    ys = [y for v in pts.values() for _, y in v]
    fx = (lambda x: math.log10(x)) if log_x else (lambda x: x)
    if xs:
        x0, x1 = min(map(fx, xs)), max(map(fx, xs))
        y0, y1 = math.log10(min(ys)), math.log10(max(ys))
    else:
        x0, x1, y0, y1 = 0.0, 1.0, -1.0, 0.0
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    y0, y1 = math.floor(y0), math.ceil(y1)
    if y1 == y0:
        y1 = y0 + 1

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (fx(x) - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (y1 - math.log10(y)) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in _log_ticks(y0, y1):
        y = MARGIN["top"] + (y1 - e) / (y1 - y0) * ph
        out.append(f'<line x1="{MARGIN["left"]}" x2="{MARGIN["left"] + pw}" y1="{_fmt(y)}" y2="{_fmt(y)}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{_fmt(y + 4)}" text-anchor="end">1e{e}</text>')
    xticks = _log_ticks(x0, x1) if log_x else _linear_ticks(x0, x1)
    for t in xticks:
        if not x0 - 1e-12 <= t <= x1 + 1e-12:
            continue
        x = MARGIN["left"] + (t - x0) / (x1 - x0) * pw
        label = f"1e{t}" if log_x else f"{t:g}"
        out.append(f'<line x1="{_fmt(x)}" x2="{_fmt(x)}" y1="{MARGIN["top"] + ph}" y2="{MARGIN["top"] + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{MARGIN["top"] + ph + 16}" text-anchor="middle">{label}</text>')
    out.append(
        f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    cy = MARGIN["top"] + ph / 2
    out.append(f'<text x="16" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 16 {cy:.1f})">{escape(ylabel)}</text>')

    for i, (label, v) in enumerate(pts.items()):
        color = PALETTE[i % len(PALETTE)]
        v = sorted(v)
        if v:
            path = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in v)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.8"/>')
            for x, y in v:
                out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="2.5" fill="{color}"/>')
        ly = MARGIN["top"] + 12 + 16 * i
        lx = MARGIN["left"] + pw + 10
        out.append(f'<line x1="{lx}" x2="{lx + 18}" y1="{ly - 4}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 22}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _family(spec: str) -> str:
    family, _, body = spec.partition(":")
    if family == "mlp":
        act = dict(kv.split("=") for kv in body.split(",") if "=" in kv).get("act", "relu")
        return f"mlp-{act}"
    return family


def plot_bench1d(rows: Sequence[dict], out_dir) -> list[Path]:
    """One chart per function: relative L2 error vs. grid size, one series per model spec."""
    by_func: dict[str, dict[str, list]] = defaultdict(lambda: defaultdict(list))
    for r in rows:
        by_func[r["func"]][r["model_spec"]].append((r["grid_n"], r["rel_l2"]))
    paths = []
    for func, series in by_func.items():
        path = Path(out_dir) / f"bench1d_{func}.svg"
        path.write_text(line_chart_svg(series, f"{func}: error vs. grid size", "grid size", "relative L2 error"))
        paths.append(path)
    return paths


def plot_bench2d(rows: Sequence[dict], out_dir) -> list[Path]:
    """Two charts per function: error vs. parameter count and vs. relative FLOPs, one series per family."""
    paths = []
    funcs = sorted({r["func"] for r in rows}, key=[r["func"] for r in rows].index)
    for func in funcs:
        sub = [r for r in rows if r["func"] == func]
        for axis, label in (("param_count", "parameters"), ("flops", "relative FLOPs")):
            series: dict[str, list] = defaultdict(list)
            for r in sub:
                series[_family(r["model_spec"])].append((r[axis], r["rel_l2"]))
            suffix = "params" if axis == "param_count" else "flops"
            path = Path(out_dir) / f"bench2d_{func}_{suffix}.svg"
            path.write_text(line_chart_svg(series, f"{func}: error vs. {label}", label, "relative L2 error", log_x=True))
            paths.append(path)
    return paths
