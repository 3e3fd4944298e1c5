"""Deterministic SVG drawings of tilings, height functions and profiles.

Lattice points map to the plane by ``(x, y) -> (x - y / 2, -y sqrt(3) / 2)``
(screen y points down), so the three lattice directions meet at 60 degrees.
Coordinates are written with four decimals and elements in sorted order,
which makes the output byte-identical for equal inputs.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .lattice import HeightFunction, Tiling, tiling_from_height
from .variational import DiscreteProfile

SCALE = 20.0
TYPE_COLORS = {1: "#e4572e", 2: "#29335c", 3: "#f3a712"}
# polygon corners of each lozenge type relative to its lower-right face
_OUTLINE = {
    1: ((0, -1), (1, 0), (1, 1), (0, 0)),
    2: ((0, 0), (1, 0), (2, 1), (1, 1)),
    3: ((0, 0), (1, 0), (1, 1), (0, 1)),
}
_RAMP = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]], dtype=float)


def _plane(x, y, h: float = 1.0) -> tuple[float, float]:
    return SCALE * h * (x - y / 2), -SCALE * h * y * math.sqrt(3) / 2


def _color(u: float) -> str:
    u = min(max(u, 0.0), 1.0) * (len(_RAMP) - 1)
    k = min(int(u), len(_RAMP) - 2)
    r, g, b = _RAMP[k] + (u - k) * (_RAMP[k + 1] - _RAMP[k])
    return f"#{int(round(r)):02x}{int(round(g)):02x}{int(round(b)):02x}"


def _polygon(pts, fill: str) -> str:
    coords = " ".join(f"{round(px, 4) + 0.0:.4f},{round(py, 4) + 0.0:.4f}" for px, py in pts)
    return f'<polygon points="{coords}" fill="{fill}" stroke="#000000" stroke-width="0.5"/>'


def _document(shapes: list[str], pts: np.ndarray) -> str:
    lo = pts.min(axis=0) - SCALE / 2
    hi = pts.max(axis=0) + SCALE / 2
    w, h = hi - lo
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{lo[0]:.4f} {lo[1]:.4f} {w:.4f} {h:.4f}" '
            f'width="{w:.0f}" height="{h:.0f}">')
    return "\n".join([head, *shapes, "</svg>"]) + "\n"


def tiling_svg(tiling: Tiling) -> str:
    shapes, pts = [], []
    for t, x, y in sorted(tiling.lozenges):
        poly = [_plane(x + dx, y + dy) for dx, dy in _OUTLINE[t]]
        pts.extend(poly)
        shapes.append(_polygon(poly, TYPE_COLORS[t]))
    return _document(shapes, np.array(pts))


def _triangles(lr, ul, x0, y0):
    for i, j in np.argwhere(lr):
        x, y = i + x0, j + y0
        yield (x, y), (x + 1, y), (x + 1, y + 1)
    for i, j in np.argwhere(ul):
        x, y = i + x0, j + y0
        yield (x, y), (x, y + 1), (x + 1, y + 1)


def _field_svg(domain, values: np.ndarray, h: float = 1.0, origin=(0.0, 0.0)) -> str:
    vmin, vmax = float(values[domain.mask].min()), float(values[domain.mask].max())
    span = vmax - vmin or 1.0
    shapes, pts = [], []
    for tri in sorted(_triangles(domain.lr_mask(), domain.ul_mask(), domain.x0, domain.y0)):
        mean = np.mean([values[x - domain.x0, y - domain.y0] for x, y in tri])
        poly = [_plane(origin[0] / h + x, origin[1] / h + y, h) for x, y in tri]
        pts.extend(poly)
        shapes.append(_polygon(poly, _color((mean - vmin) / span)))
    return _document(shapes, np.array(pts))


def render_svg(obj, path=None) -> str:
    """SVG text for a tiling, height function or profile; also written to ``path`` when given.

    Tilings colour lozenges by type.  Height functions and profiles shade
    each lattice triangle by the mean of its corner values.
    """
    if isinstance(obj, Tiling):
        text = tiling_svg(obj)
    elif isinstance(obj, HeightFunction):
        text = _field_svg(obj.domain, obj.array.astype(float))
    elif isinstance(obj, DiscreteProfile):
        text = _field_svg(obj.mesh.domain, obj.values, obj.mesh.h, obj.mesh.origin)
    else:
        raise TypeError(f"cannot render {type(obj).__name__}")
    if path is not None:
        Path(path).write_text(text)
    return text


def render_height_as_tiling(height: HeightFunction, path=None) -> str:
    return render_svg(tiling_from_height(height), path)
