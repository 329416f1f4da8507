"""Deterministic artifact writers: JSON, CSV and fixed-viewport SVG, all written atomically."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from typing import Iterable, Sequence

import numpy as np

VIEW = 800
PAD = 40


def atomic_write(path: str, text: str) -> None:
    """Write to a temporary file in the target directory, then rename over the target."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


class _Frame:
    """Maps data coordinates into the fixed 800 x 800 viewport, preserving aspect ratio."""

    def __init__(self, xs: np.ndarray, ys: np.ndarray):
        self.xmin, self.xmax = float(np.min(xs)), float(np.max(xs))
        self.ymin, self.ymax = float(np.min(ys)), float(np.max(ys))
        span = max(self.xmax - self.xmin, self.ymax - self.ymin) or 1.0
        self.scale = (VIEW - 2 * PAD) / span
        self.cx = 0.5 * (self.xmin + self.xmax)
        self.cy = 0.5 * (self.ymin + self.ymax)

    def __call__(self, x, y):
        return VIEW / 2 + (x - self.cx) * self.scale, VIEW / 2 - (y - self.cy) * self.scale

    def metadata(self) -> str:
        return json.dumps({"xmin": self.xmin, "xmax": self.xmax, "ymin": self.ymin, "ymax": self.ymax,
                           "scale": self.scale})


def _svg(frame: _Frame, body: list[str], title: str) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEW} {VIEW}" width="{VIEW}" height="{VIEW}">',
        f"<title>{title}</title>",
        f"<metadata>{frame.metadata()}</metadata>",
        f'<rect x="0" y="0" width="{VIEW}" height="{VIEW}" fill="white"/>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def svg_polylines(curves: Sequence[np.ndarray], title: str = "") -> str:
    """Planar curves (each an (N, 2) array) as SVG polylines."""
    allpts = np.vstack([np.asarray(c, dtype=float) for c in curves])
    frame = _Frame(allpts[:, 0], allpts[:, 1])
    body = []
    for c in curves:
        pts = " ".join("%.3f,%.3f" % frame(x, y) for x, y in np.asarray(c, dtype=float))
        body.append(f'<polyline fill="none" stroke="black" stroke-width="1.5" points="{pts}"/>')
    return _svg(frame, body, title)


def svg_scatter(points: np.ndarray, title: str = "", radius: float = 0.8) -> str:
    pts = np.asarray(points, dtype=float)
    frame = _Frame(pts[:, 0], pts[:, 1])
    body = ['<g fill="black">']
    body += ['<circle cx="%.3f" cy="%.3f" r="%g"/>' % (*frame(x, y), radius) for x, y in pts]
    body.append("</g>")
    return _svg(frame, body, title)
