"""Self-contained SVG charts for the benchmark CSV outputs.

Line charts draw one series per method with a shaded confidence band;
box charts summarize raw per-circuit error distributions.  Output is
deterministic: identical input produces byte-identical SVG.
"""

from __future__ import annotations

import csv
import math

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 28, 46

METHOD_COLORS = {
    "unmitigated": "#888888",
    "zne": "#1f77b4",
    "ols": "#2ca02c",
    "rf": "#d62728",
    "mlp": "#9467bd",
}
_FALLBACK_COLORS = ["#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _color(method: str, i: int) -> str:
    return METHOD_COLORS.get(method, _FALLBACK_COLORS[i % len(_FALLBACK_COLORS)])


def _f(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.0f}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{title}</text>',
        ]

    def line(self, x1, y1, x2, y2, color="#333333", width=1.0, dash=""):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{color}" stroke-width="{width}"{d}/>'
        )

    def text(self, x, y, s, size=11, anchor="middle", color="#222222"):
        self.parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}" '
            f'font-family="sans-serif" font-size="{size}" fill="{color}">{s}</text>'
        )

    def polyline(self, pts, color, width=1.6):
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"/>'
        )

    def polygon(self, pts, color, opacity=0.18):
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.parts.append(
            f'<polygon points="{coords}" fill="{color}" fill-opacity="{opacity}" '
            f'stroke="none"/>'
        )

    def rect(self, x, y, w, h, fill, stroke="#333333"):
        self.parts.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
            f'fill="{fill}" fill-opacity="0.45" stroke="{stroke}"/>'
        )

    def circle(self, x, y, r, fill):
        self.parts.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{r}" fill="{fill}"/>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12:
        ticks.append(round(t, 12))
        t += step
    return ticks


class _Scale:
    def __init__(self, lo, hi, out_lo, out_hi):
        self.lo, self.hi = lo, hi
        self.out_lo, self.out_hi = out_lo, out_hi

    def __call__(self, v: float) -> float:
        if self.hi == self.lo:
            return (self.out_lo + self.out_hi) / 2
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.out_lo + frac * (self.out_hi - self.out_lo)


def _axes(canvas: _Canvas, xs: _Scale, ys: _Scale, xlabel: str, ylabel: str):
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    canvas.line(x0, y0, x1, y0)
    canvas.line(x0, y0, x0, y1)
    for t in _nice_ticks(xs.lo, xs.hi):
        px = xs(t)
        canvas.line(px, y0, px, y0 + 4)
        canvas.text(px, y0 + 17, f"{t:g}", size=10)
    for t in _nice_ticks(ys.lo, ys.hi):
        py = ys(t)
        canvas.line(x0 - 4, py, x0, py)
        canvas.text(x0 - 7, py + 3.5, f"{t:g}", size=10, anchor="end")
    canvas.text((x0 + x1) / 2, HEIGHT - 8, xlabel, size=12)
    canvas.parts.append(
        f'<text x="16" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.2f})">{ylabel}</text>'
    )


def _read_csv(path) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty CSV")
        return list(reader.fieldnames), list(reader)


def render_line_chart(path, out_path, title: str | None = None) -> None:
    """Line chart with CI bands from a metric-row CSV.

    Needs columns method, bucket, mean_error, ci_lo, ci_hi; non-numeric
    buckets are placed at ordinal positions.
    """
    header, records = _read_csv(path)
    required = {"method", "bucket", "mean_error", "ci_lo", "ci_hi"}
    if not required.issubset(header):
        raise ValueError(f"{path}: line chart needs columns {sorted(required)}")
    canvas = _Canvas(title or str(path))
    if not records:
        xs = _Scale(0, 1, MARGIN_L, WIDTH - MARGIN_R)
        ys = _Scale(0, 1, HEIGHT - MARGIN_B, MARGIN_T)
        _axes(canvas, xs, ys, "bucket", "mean L2 error")
        with open(out_path, "w") as fh:
            fh.write(canvas.render())
        return

    buckets = []
    for r in records:
        if r["bucket"] not in buckets:
            buckets.append(r["bucket"])
    try:
        xvals = {b: float(b) for b in buckets}
    except ValueError:
        xvals = {b: float(i) for i, b in enumerate(buckets)}
    methods = []
    for r in records:
        if r["method"] not in methods:
            methods.append(r["method"])
    ymax = max(float(r["ci_hi"]) for r in records)
    xs = _Scale(min(xvals.values()), max(xvals.values()), MARGIN_L, WIDTH - MARGIN_R)
    ys = _Scale(0.0, ymax * 1.08 or 1.0, HEIGHT - MARGIN_B, MARGIN_T)
    _axes(canvas, xs, ys, "bucket", "mean L2 error")
    for i, method in enumerate(methods):
        recs = [r for r in records if r["method"] == method]
        recs.sort(key=lambda r: xvals[r["bucket"]])
        color = _color(method, i)
        band = [(xs(xvals[r["bucket"]]), ys(float(r["ci_hi"]))) for r in recs] + [
            (xs(xvals[r["bucket"]]), ys(float(r["ci_lo"]))) for r in reversed(recs)
        ]
        canvas.polygon(band, color)
        canvas.polyline(
            [(xs(xvals[r["bucket"]]), ys(float(r["mean_error"]))) for r in recs], color
        )
        lx = WIDTH - MARGIN_R - 110
        ly = MARGIN_T + 16 * i + 6
        canvas.line(lx, ly - 4, lx + 22, ly - 4, color, width=2.5)
        canvas.text(lx + 28, ly, method, size=11, anchor="start")
    with open(out_path, "w") as fh:
        fh.write(canvas.render())


def render_box_chart(path, out_path, title: str | None = None) -> None:
    """Box chart of per-circuit errors; needs columns method and error."""
    header, records = _read_csv(path)
    if not {"method", "error"}.issubset(header):
        raise ValueError(f"{path}: box chart needs columns ['method', 'error']")
    canvas = _Canvas(title or str(path))
    methods = []
    for r in records:
        if r["method"] not in methods:
            methods.append(r["method"])
    if not methods:
        xs = _Scale(0, 1, MARGIN_L, WIDTH - MARGIN_R)
        ys = _Scale(0, 1, HEIGHT - MARGIN_B, MARGIN_T)
        _axes(canvas, xs, ys, "method", "L2 error")
        with open(out_path, "w") as fh:
            fh.write(canvas.render())
        return
    groups = {m: sorted(float(r["error"]) for r in records if r["method"] == m) for m in methods}
    ymax = max(v for vals in groups.values() for v in vals)
    xs = _Scale(-0.5, len(methods) - 0.5, MARGIN_L, WIDTH - MARGIN_R)
    ys = _Scale(0.0, ymax * 1.08 or 1.0, HEIGHT - MARGIN_B, MARGIN_T)
    _axes(canvas, xs, ys, "method", "L2 error")
    for i, m in enumerate(methods):
        vals = groups[m]
        color = _color(m, i)

        def q(p):
            k = p * (len(vals) - 1)
            f = math.floor(k)
            c = min(f + 1, len(vals) - 1)
            return vals[f] + (vals[c] - vals[f]) * (k - f)

        q1, q2, q3 = q(0.25), q(0.5), q(0.75)
        iqr = q3 - q1
        lo_w = min((v for v in vals if v >= q1 - 1.5 * iqr), default=vals[0])
        hi_w = max((v for v in vals if v <= q3 + 1.5 * iqr), default=vals[-1])
        cx, half = xs(i), 24.0
        canvas.rect(cx - half, ys(q3), 2 * half, ys(q1) - ys(q3), color)
        canvas.line(cx - half, ys(q2), cx + half, ys(q2), "#000000", width=1.5)
        canvas.line(cx, ys(q1), cx, ys(lo_w))
        canvas.line(cx, ys(q3), cx, ys(hi_w))
        canvas.line(cx - half / 2, ys(lo_w), cx + half / 2, ys(lo_w))
        canvas.line(cx - half / 2, ys(hi_w), cx + half / 2, ys(hi_w))
        for v in vals:
            if v < q1 - 1.5 * iqr or v > q3 + 1.5 * iqr:
                canvas.circle(cx, ys(v), 1.6, "#000000")
        canvas.text(cx, HEIGHT - MARGIN_B + 17, m, size=10)
    with open(out_path, "w") as fh:
        fh.write(canvas.render())


def plot_csv(path, kind: str, out_path, title: str | None = None) -> None:
    if kind == "line":
        render_line_chart(path, out_path, title)
    elif kind == "box":
        render_box_chart(path, out_path, title)
    else:
        raise ValueError(f"unknown plot kind {kind!r} (line|box)")
