"""Report emission: metrics/occurrence/sweep CSVs and self-contained SVGs.

All files are byte-deterministic for identical inputs: fixed field order,
fixed float formatting, no timestamps. Percentages render at two decimals
with trailing zeros trimmed ("96.33%", "95.4%", "100%"); undefined metrics
render "n/a".
"""

import os

from .evaluation import MethodResult, check_metrics_identity
from .imaging import LABELS, MA, NORMAL

METRIC_NAMES = ("accuracy", "sensitivity", "specificity", "precision")


def format_percent(value) -> str:
    if value is None:
        return "n/a"
    text = f"{value * 100.0:.2f}".rstrip("0").rstrip(".")
    return text + "%"


def _svg_open(width, height):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
    )


def _bars(values, x0, y0, plot_w, plot_h, vmax, fill):
    """Bar rectangles inside the plot box; values of None draw nothing."""
    n = len(values)
    if n == 0 or vmax <= 0:
        return ""
    slot = plot_w / n
    bar_w = slot * 0.7
    parts = []
    for i, v in enumerate(values):
        if v is None:
            continue
        h = plot_h * (v / vmax)
        x = x0 + i * slot + slot * 0.15
        y = y0 + plot_h - h
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
            f'height="{h:.2f}" fill="{fill}"/>'
        )
    return "\n".join(parts) + "\n"


def _axes(x0, y0, plot_w, plot_h):
    return (
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y0 + plot_h}" '
        f'stroke="black" stroke-width="1"/>\n'
        f'<line x1="{x0}" y1="{y0 + plot_h}" x2="{x0 + plot_w}" '
        f'y2="{y0 + plot_h}" stroke="black" stroke-width="1"/>\n'
    )


def _text(x, y, s, size=12, anchor="middle"):
    return (
        f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" '
        f'font-size="{size}" text-anchor="{anchor}">{s}</text>\n'
    )


def occurrence_chart_svg(occurrence) -> str:
    """Two stacked panels of per-word raw-count totals, MA above NORMAL."""
    width, panel_h, margin = 720, 180, 45
    height = 2 * (panel_h + margin) + margin
    vmax = max(
        (int(v) for label in LABELS for v in occurrence[label]), default=0
    )
    out = [_svg_open(width, height)]
    for row, label in enumerate((MA, NORMAL)):
        y0 = margin + row * (panel_h + margin)
        x0, plot_w = 55, width - 85
        out.append(_text(width / 2, y0 - 8, f"visual word occurrence: {label}", 13))
        out.append(_axes(x0, y0, plot_w, panel_h))
        out.append(
            _bars([int(v) for v in occurrence[label]], x0, y0, plot_w,
                  panel_h, max(vmax, 1), "#4878a8")
        )
        out.append(_text(x0 - 6, y0 + 10, str(vmax), 10, anchor="end"))
        out.append(_text(x0 - 6, y0 + panel_h, "0", 10, anchor="end"))
        out.append(_text(width / 2, y0 + panel_h + 16, "visual word index", 11))
    out.append("</svg>\n")
    return "".join(out)


def sweep_chart_svg(points) -> str:
    """Validation accuracy vs hidden-layer width as a marked polyline."""
    width, height = 560, 360
    x0, y0, plot_w, plot_h = 60, 40, width - 100, height - 110
    out = [_svg_open(width, height)]
    out.append(_text(width / 2, 24, "hidden neurons vs validation accuracy", 14))
    out.append(_axes(x0, y0, plot_w, plot_h))
    if points:
        hs = [p.hidden for p in points]
        hmin, hmax = min(hs), max(hs)
        span = max(hmax - hmin, 1)
        coords = []
        for p in points:
            px = x0 + plot_w * ((p.hidden - hmin) / span)
            py = y0 + plot_h * (1.0 - p.accuracy)
            coords.append((px, py, p))
        pts = " ".join(f"{px:.2f},{py:.2f}" for px, py, _ in coords)
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="#a8483f" '
            f'stroke-width="2"/>\n'
        )
        for px, py, p in coords:
            out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="#a8483f"/>')
            out.append("\n")
            out.append(_text(px, y0 + plot_h + 16, str(p.hidden), 10))
    out.append(_text(x0 - 8, y0 + 10, "1.0", 10, anchor="end"))
    out.append(_text(x0 - 8, y0 + plot_h, "0.0", 10, anchor="end"))
    out.append(_text(width / 2, height - 18, "hidden neurons", 11))
    out.append("</svg>\n")
    return "".join(out)


def criterion_chart_svg(rows, criterion: str) -> str:
    """One bar per method for a single criterion; x labels are method indices."""
    width, height = 560, 360
    x0, y0, plot_w, plot_h = 60, 40, width - 100, height - 110
    values = [getattr(r.metrics, criterion) for r in rows]
    out = [_svg_open(width, height)]
    out.append(_text(width / 2, 24, criterion, 14))
    out.append(_axes(x0, y0, plot_w, plot_h))
    out.append(_bars(values, x0, y0, plot_w, plot_h, 1.0, "#48785a"))
    n = max(len(rows), 1)
    slot = plot_w / n
    for i, r in enumerate(rows):
        cx = x0 + i * slot + slot / 2
        out.append(_text(cx, y0 + plot_h + 16, str(i + 1), 10))
        label = format_percent(values[i])
        ybar = y0 + plot_h * (1.0 - (values[i] or 0.0)) - 4
        out.append(_text(cx, max(ybar, y0 + 10), label, 9))
    out.append(_text(x0 - 8, y0 + 10, "100%", 10, anchor="end"))
    out.append(_text(x0 - 8, y0 + plot_h, "0%", 10, anchor="end"))
    out.append(_text(width / 2, height - 18, "method index", 11))
    out.append("</svg>\n")
    return "".join(out)


def write_metrics_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("method,accuracy,sensitivity,specificity,precision\n")
        for r in rows:
            cells = [format_percent(getattr(r.metrics, name)) for name in METRIC_NAMES]
            fh.write(",".join([r.name] + cells) + "\n")


def write_occurrence_csv(path, occurrence) -> None:
    k = len(occurrence[MA])
    with open(path, "w", newline="") as fh:
        fh.write("word_index,MA,NORMAL\n")
        for i in range(k):
            fh.write(f"{i},{int(occurrence[MA][i])},{int(occurrence[NORMAL][i])}\n")


def write_sweep_csv(path, points) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("hidden,accuracy\n")
        for p in points:
            fh.write(f"{p.hidden},{p.accuracy:.17g}\n")


def emit_report(rows, occurrence_sums, sweep, out_dir) -> list:
    """Write the full report set into out_dir; returns the file names written.

    rows: MethodResult list (metrics.csv + the four fig7 charts).
    occurrence_sums: per-class raw-count totals (word_occurrence.csv + fig5).
    sweep: SweepPoint list; when empty the sweep files are omitted.
    """
    os.makedirs(out_dir, exist_ok=True)
    for r in rows:
        check_metrics_identity(r.cm, r.metrics)
    written = []

    def emit(name, text):
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            fh.write(text)
        written.append(name)

    write_metrics_csv(os.path.join(out_dir, "metrics.csv"), rows)
    written.append("metrics.csv")
    write_occurrence_csv(os.path.join(out_dir, "word_occurrence.csv"),
                         occurrence_sums)
    written.append("word_occurrence.csv")
    emit("fig5.svg", occurrence_chart_svg(occurrence_sums))
    if sweep:
        write_sweep_csv(os.path.join(out_dir, "sweep.csv"), sweep)
        written.append("sweep.csv")
        emit("fig6.svg", sweep_chart_svg(sweep))
    for criterion in METRIC_NAMES:
        emit(f"fig7_{criterion}.svg", criterion_chart_svg(rows, criterion))
    return written
