"""
Deterministic CSV/JSON writers and a small self-contained SVG emitter.

Floats are written with 17 significant digits so that identical inputs give
byte-identical files and values round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

FLOAT_FMT = "{:.17g}"


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    return str(v)


def _plain(obj):
    """Convert numpy scalars/arrays, complex numbers and tuples to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(obj.real), _plain(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj, indent: int) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_encode(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _encode(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("non-finite float in JSON output")
        return FLOAT_FMT.format(obj)
    return json.dumps(obj)


def dumps_json(obj) -> str:
    """JSON with sorted keys, two-space indent and 17-significant-digit floats."""
    return _encode(_plain(obj), 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(obj))
    return path


def dumps_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_csv(header, rows))
    return path


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


class SvgFigure:
    """Scatter and polyline plot in data coordinates with a framed axis box."""

    def __init__(self, width: int = 640, height: int = 480, margin: int = 50, title: str = ""):
        self.width, self.height, self.margin = width, height, margin
        self.title = title
        self.layers: list[tuple[str, np.ndarray, str]] = []
        self.xlabel = "x"
        self.ylabel = "y"

    def scatter(self, pts, color: str | None = None):
        self.layers.append(("scatter", np.asarray(pts, dtype=float).reshape(-1, 2), color or self._next_color()))
        return self

    def polyline(self, pts, color: str | None = None):
        self.layers.append(("line", np.asarray(pts, dtype=float).reshape(-1, 2), color or self._next_color()))
        return self

    def _next_color(self) -> str:
        return PALETTE[len(self.layers) % len(PALETTE)]

    def _bounds(self):
        data = [p for _, p, _ in self.layers if len(p)]
        if not data:
            return -1.0, 1.0, -1.0, 1.0
        allp = np.vstack(data)
        allp = allp[np.all(np.isfinite(allp), axis=1)]
        if not len(allp):
            return -1.0, 1.0, -1.0, 1.0
        x0, y0 = allp.min(axis=0)
        x1, y1 = allp.max(axis=0)
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 == y0:
            y0, y1 = y0 - 1, y1 + 1
        return x0, x1, y0, y1

    def to_string(self) -> str:
        x0, x1, y0, y1 = self._bounds()
        m, W, H = self.margin, self.width, self.height

        def px(x):
            return m + (x - x0) / (x1 - x0) * (W - 2 * m)

        def py(y):
            return H - m - (y - y0) / (y1 - y0) * (H - 2 * m)

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<rect x="{m}" y="{m}" width="{W - 2 * m}" height="{H - 2 * m}" fill="none" stroke="black"/>',
        ]
        for kind, pts, color in self.layers:
            pts = pts[np.all(np.isfinite(pts), axis=1)]
            if kind == "scatter":
                for x, y in pts:
                    out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="1.5" fill="{color}"/>')
            elif len(pts) > 1:
                coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
                out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1"/>')
        for v, anchor in ((x0, "start"), (x1, "end")):
            out.append(f'<text x="{px(v):.2f}" y="{H - m + 15}" font-size="10" text-anchor="{anchor}">{v:.4g}</text>')
        for v in (y0, y1):
            out.append(f'<text x="{m - 4}" y="{py(v):.2f}" font-size="10" text-anchor="end">{v:.4g}</text>')
        out.append(f'<text x="{W / 2}" y="{H - 10}" font-size="12" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(
            f'<text x="12" y="{H / 2}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 12 {H / 2})">{escape(self.ylabel)}</text>'
        )
        if self.title:
            out.append(f'<text x="{W / 2}" y="{m / 2}" font-size="14" text-anchor="middle">{escape(self.title)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_string())
        return path
