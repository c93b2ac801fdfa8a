"""CSV and SVG output for aggregate series and comparison reports."""

from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .harness import ComparisonReport
from .metrics import AggregateSeries, to_db

CSV_HEADER = ("step", "ep_avg_db", "ep_max_db", "eta_avg", "eta_max")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_series_csv(series: AggregateSeries, path) -> Path:
    path = Path(path)
    avg_db = to_db(series.ep_avg)
    max_db = to_db(series.ep_max)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for i, step in enumerate(series.steps):
                writer.writerow(
                    [int(step), _fmt(avg_db[i]), _fmt(max_db[i]), _fmt(series.eta_avg[i]), _fmt(series.eta_max[i])]
                )
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def export_csv(obj, path) -> list[Path]:
    """Write one CSV per series.

    A report produces ``<stem>_original.csv`` and ``<stem>_amended.csv`` next
    to ``path``.
    """
    path = Path(path)
    if isinstance(obj, ComparisonReport):
        return [
            write_series_csv(obj.series_original, path.with_name(f"{path.stem}_original.csv")),
            write_series_csv(obj.series_amended, path.with_name(f"{path.stem}_amended.csv")),
        ]
    return [write_series_csv(obj, path)]


def read_csv(path) -> AggregateSeries:
    """Inverse of ``write_series_csv``; ep columns are converted back to linear."""
    rows = []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(CSV_HEADER))
    return AggregateSeries(
        steps=data[:, 0].astype(np.int64),
        ep_avg=10.0 ** (data[:, 1] / 10.0),
        ep_max=10.0 ** (data[:, 2] / 10.0),
        eta_avg=data[:, 3],
        eta_max=data[:, 4],
        n_runs=0,
    )


# Plot layout, in SVG user units.
WIDTH, HEIGHT = 900, 540
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 180, 30, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#000000", "#9467bd", "#8c564b")


def _thin(steps: np.ndarray, y: np.ndarray, max_points: int = 2000):
    """Min/max decimation: each bucket keeps its extremes, so peaks survive."""
    n = len(steps)
    if n <= max_points:
        return steps, y
    edges = np.linspace(0, n, max_points // 2 + 1).astype(int)
    idx = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            idx.extend(sorted({a + int(np.argmin(y[a:b])), a + int(np.argmax(y[a:b]))}))
    idx = np.array(idx)
    return steps[idx], y[idx]


def report_curves(report: ComparisonReport) -> dict[str, np.ndarray]:
    return {
        "original avg": report.series_original.ep_avg,
        "original max": report.series_original.ep_max,
        "amended avg": report.series_amended.ep_avg,
        "amended max": report.series_amended.ep_max,
    }


def series_curves(series: AggregateSeries) -> dict[str, np.ndarray]:
    return {"avg": series.ep_avg, "max": series.ep_max}


def y_range(curves: dict[str, np.ndarray]) -> tuple[float, float]:
    """The plotted dB data padded by 3 dB on each side."""
    db = [to_db(c) for c in curves.values()]
    return min(float(c.min()) for c in db) - 3.0, max(float(c.max()) for c in db) + 3.0


def render_svg(
    curves: dict[str, np.ndarray],
    steps: np.ndarray,
    break_step: int | None = None,
    title: str = "projection error power",
) -> str:
    """Line plot of ep curves (linear input, drawn in dB) against step."""
    steps = np.asarray(steps, dtype=float)
    y0, y1 = y_range(curves)
    x0, x1 = float(steps[0]), float(max(steps[-1], steps[0] + 1))
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN_T + (y1 - v) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" data-ymin="{y0!r}" data-ymax="{y1!r}">',
        f"<title>{escape(title)}</title>",
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for v in np.linspace(y0, y1, 6):
        parts.append(
            f'<text x="{MARGIN_L - 6}" y="{sy(v) + 4:.2f}" font-size="11" text-anchor="end">{v:.1f}</text>'
        )
    for v in np.linspace(x0, x1, 7):
        parts.append(
            f'<text x="{sx(v):.2f}" y="{HEIGHT - MARGIN_B + 16}" font-size="11" text-anchor="middle">{v:.0f}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_L + pw / 2}" y="{HEIGHT - 10}" font-size="13" text-anchor="middle">step</text>'
    )
    parts.append(
        f'<text x="16" y="{MARGIN_T + ph / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_T + ph / 2})">e_p (dB)</text>'
    )
    if break_step is not None:
        bx = sx(break_step)
        parts.append(
            f'<line class="break-marker" x1="{bx:.2f}" y1="{MARGIN_T}" x2="{bx:.2f}" '
            f'y2="{MARGIN_T + ph}" stroke="#888" stroke-dasharray="4 3"/>'
        )
    for i, (label, values) in enumerate(curves.items()):
        xs, ys = _thin(steps, to_db(values))
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))
        color = PALETTE[i % len(PALETTE)]
        parts.append(
            f'<polyline class="curve" data-label="{escape(label)}" fill="none" stroke="{color}" '
            f'stroke-width="1" points="{pts}"/>'
        )
        ly = MARGIN_T + 16 + 18 * i
        lx = WIDTH - MARGIN_R + 12
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 30}" y="{ly + 4}" font-size="12">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _write(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def export_plot(report: ComparisonReport, path, title: str = "projection error power") -> Path:
    """Four curves: avg and max ep for both arms, plus a break-step marker."""
    svg = render_svg(report_curves(report), report.series_original.steps, report.break_step, title)
    return _write(Path(path), svg)


def export_series_plot(series: AggregateSeries, path, break_step=None, title="projection error power") -> Path:
    return _write(Path(path), render_svg(series_curves(series), series.steps, break_step, title))
