"""Plot-data and SVG emission for finished runs.

Each run yields a two-column data file (t_s, actual_offset_ns); a suite
of skew runs additionally yields a long-format overlay file. The SVG
renderer is self-contained and byte-deterministic: fixed viewport, fixed
decimal formatting, no timestamps or randomized ids.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .runner import RunResult

_WIDTH, _HEIGHT = 720, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 30, 45
_SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass(frozen=True)
class Series:
    label: str
    points: list[tuple[int, int]]  # (t_s, offset_ns)


def offsets_csv(result: RunResult) -> str:
    if not result.trace.records:
        raise ValueError(f"scenario {result.config.name!r} produced an empty trace")
    lines = ["t_s,actual_offset_ns"]
    lines += [f"{t},{x}" for t, x in result.trace.actual_series()]
    return "\n".join(lines) + "\n"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** len(str(int(abs(raw)))) if abs(raw) >= 1 else 1
    for step in (mag / 10, mag / 5, mag / 2, mag, mag * 2):
        if (hi - lo) / step <= n + 1:
            break
    first = step * (lo // step)
    ticks, v = [], first
    while v <= hi:
        if v >= lo:
            ticks.append(v)
        v += step
    return ticks


def render_offset_svg(series: list[Series], title: str) -> str:
    """A line chart of actual offset (us) against time (s)."""
    if not series or not any(s.points for s in series):
        raise ValueError("nothing to plot")
    all_t = [t for s in series for t, _ in s.points]
    all_x = [x / 1000.0 for s in series for _, x in s.points]  # ns -> us
    t_lo, t_hi = min(all_t), max(all_t)
    x_lo, x_hi = min(all_x), max(all_x)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    span_t = max(1, t_hi - t_lo)
    span_x = x_hi - x_lo

    def px(t: float) -> float:
        return _MARGIN_L + (t - t_lo) / span_t * (_WIDTH - _MARGIN_L - _MARGIN_R)

    def py(x: float) -> float:
        return _HEIGHT - _MARGIN_B - (x - x_lo) / span_x * (_HEIGHT - _MARGIN_T - _MARGIN_B)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for tick in _nice_ticks(x_lo, x_hi):
        y = py(tick)
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{y:.2f}" x2="{_WIDTH - _MARGIN_R}" y2="{y:.2f}" '
            f'stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 6}" y="{y + 4:.2f}" text-anchor="end">{tick:g}</text>'
        )
    for tick in _nice_ticks(t_lo, t_hi):
        x = px(tick)
        parts.append(
            f'<line x1="{x:.2f}" y1="{_MARGIN_T}" x2="{x:.2f}" y2="{_HEIGHT - _MARGIN_B}" '
            f'stroke="#eeeeee"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{_HEIGHT - _MARGIN_B + 16}" text-anchor="middle">{tick:g}</text>'
        )
    parts.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{_WIDTH - _MARGIN_L - _MARGIN_R}" '
        f'height="{_HEIGHT - _MARGIN_T - _MARGIN_B}" fill="none" stroke="#333333"/>'
    )
    for i, s in enumerate(series):
        color = _SERIES_COLORS[i % len(_SERIES_COLORS)]
        coords = " ".join(f"{px(t):.2f},{py(x / 1000.0):.2f}" for t, x in s.points)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{_WIDTH - _MARGIN_R - 8}" y="{_MARGIN_T + 16 + 16 * i}" '
            f'text-anchor="end" fill="{color}">{s.label}</text>'
        )
    parts.append(
        f'<text x="{_WIDTH / 2:.1f}" y="{_HEIGHT - 8}" text-anchor="middle">time (s)</text>'
    )
    parts.append(
        f'<text x="16" y="{_HEIGHT / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_HEIGHT / 2:.1f})">actual offset (us)</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot_data(
    result: RunResult, out_dir: str | Path, formats: tuple[str, ...] = ("csv", "svg")
) -> list[Path]:
    """Write per-run figure data; returns the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out / f"{result.config.name}_offset.csv"
        path.write_text(offsets_csv(result), newline="")
        written.append(path)
    if "svg" in formats:
        svg = render_offset_svg(
            [Series(result.config.name, result.trace.actual_series())],
            f"actual offset: {result.config.name}",
        )
        path = out / f"{result.config.name}_offset.svg"
        path.write_text(svg, newline="")
        written.append(path)
    return written


def emit_overlay(
    results: list[RunResult], out_dir: str | Path, name: str = "skew_overlay"
) -> list[Path]:
    """Overlay the actual-offset series of several runs in one chart."""
    if not results:
        raise ValueError("nothing to overlay")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["scenario,t_s,actual_offset_ns"]
    for r in results:
        lines += [f"{r.config.name},{t},{x}" for t, x in r.trace.actual_series()]
    csv_path = out / f"{name}.csv"
    csv_path.write_text("\n".join(lines) + "\n", newline="")
    svg = render_offset_svg(
        [Series(r.config.name, r.trace.actual_series()) for r in results],
        f"actual offset overlay: {name}",
    )
    svg_path = out / f"{name}.svg"
    svg_path.write_text(svg, newline="")
    return [csv_path, svg_path]
