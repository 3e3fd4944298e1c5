"""Reading and writing domains, height functions and profiles.

Domains are JSON documents, either ``{"hexagon": [A, B, C]}`` or an explicit
``{"vertices": [[x, y], ...], "boundary": [[x, y, h], ...]}``.  Heights and
profiles are comma separated tables with a header row.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .lattice import BoundaryHeight, Domain, HeightFunction, Tiling, hexagon_domain

DOMAIN_FORMAT = "lozenge-domain"
DOMAIN_VERSION = 1


def domain_from_spec(spec: dict) -> tuple[Domain, BoundaryHeight]:
    if "hexagon" in spec:
        A, B, C = (int(v) for v in spec["hexagon"])
        return hexagon_domain(A, B, C)
    if "vertices" not in spec or "boundary" not in spec:
        raise ValueError("domain spec needs 'hexagon' or both 'vertices' and 'boundary'")
    domain = Domain([tuple(v) for v in spec["vertices"]])
    values = {(int(x), int(y)): int(h) for x, y, h in spec["boundary"]}
    return domain, BoundaryHeight(domain, values)


def domain_to_spec(domain: Domain, boundary: BoundaryHeight) -> dict:
    return {
        "format": DOMAIN_FORMAT,
        "version": DOMAIN_VERSION,
        "vertices": [list(v) for v in domain.sorted_vertices()],
        "boundary": [[x, y, boundary[(x, y)]] for x, y in sorted(domain.boundary)],
    }


def load_domain(path) -> tuple[Domain, BoundaryHeight]:
    spec = json.loads(Path(path).read_text())
    version = spec.get("version", DOMAIN_VERSION)
    if version != DOMAIN_VERSION:
        raise ValueError(f"unsupported domain file version {version}")
    return domain_from_spec(spec)


def save_domain(domain: Domain, boundary: BoundaryHeight, path) -> None:
    Path(path).write_text(json.dumps(domain_to_spec(domain, boundary)) + "\n")


def save_height_table(height: HeightFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "h"])
        for x, y in height.domain.sorted_vertices():
            w.writerow([x, y, height[(x, y)]])


def load_height_table(path) -> HeightFunction:
    with open(path, newline="") as fh:
        rows = [(int(r["x"]), int(r["y"]), int(r["h"])) for r in csv.DictReader(fh)]
    domain = Domain([(x, y) for x, y, _ in rows])
    return HeightFunction(domain, {(x, y): h for x, y, h in rows})


def save_profile_table(profile, path) -> None:
    """Mesh-vertex table ``x, y, H, boundary`` of a discrete profile."""
    X, Y = profile.mesh.coords()
    m, b = profile.mesh.mask, profile.mesh.boundary_mask
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "H", "boundary"])
        for i, j in np.argwhere(m):
            w.writerow([repr(float(X[i, j])), repr(float(Y[i, j])), repr(float(profile.values[i, j])), int(b[i, j])])


def write_table(rows, header, path=None, delimiter: str = "\t") -> str:
    """Delimited text table; written to ``path`` when given, always returned."""
    lines = [delimiter.join(header)]
    for r in rows:
        lines.append(delimiter.join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in r))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def tiling_to_line(tiling: Tiling) -> str:
    """One JSON line holding the sorted type-1 centres, which fix the tiling of its domain."""
    return json.dumps({"type1": [list(c) for c in tiling.sorted_centers()]})


def tiling_from_line(line: str, domain: Domain) -> Tiling:
    return Tiling(domain, [tuple(c) for c in json.loads(line)["type1"]])


def save_tilings(tilings, path) -> None:
    Path(path).write_text("".join(tiling_to_line(t) + "\n" for t in tilings))


def load_tilings(path, domain: Domain) -> list[Tiling]:
    return [tiling_from_line(line, domain) for line in Path(path).read_text().splitlines() if line.strip()]
