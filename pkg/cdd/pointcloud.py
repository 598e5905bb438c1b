"""Point cloud generation, partial-view cropping and file I/O.

Synthetic shapes are drawn with numpy's PCG64 bit generator, which is fully
specified (128-bit LCG state with an XSL-RR output permutation) and therefore
reproducible outside Python. A given ``(kind, count, seed)`` always yields the
same cloud, bit for bit.
"""

import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import CloudParseError
from .models import CropSpec, PointCloud, ShapeSpec
from .records import atomic_write_text, format_number

logger = logging.getLogger(__name__)

TORUS_MAJOR_RADIUS = 0.7
TORUS_MINOR_RADIUS = 0.3


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator used for every random draw in cdd."""
    return np.random.Generator(np.random.PCG64(seed))


def _sample_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    g = rng.standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _sample_cube(rng: np.random.Generator, n: int) -> np.ndarray:
    # All six faces have the same area, so a uniform face choice is area-weighted.
    face = rng.integers(0, 6, size=n)
    uv = rng.uniform(-1.0, 1.0, size=(n, 2))
    axis = face // 2
    sign = np.where(face % 2 == 0, -1.0, 1.0)
    points = np.empty((n, 3))
    for a in range(3):
        others = [b for b in range(3) if b != a]
        rows = axis == a
        points[rows, a] = sign[rows]
        points[rows, others[0]] = uv[rows, 0]
        points[rows, others[1]] = uv[rows, 1]
    return points


def _sample_torus(rng: np.random.Generator, n: int) -> np.ndarray:
    big, small = TORUS_MAJOR_RADIUS, TORUS_MINOR_RADIUS
    u_kept, v_kept = [], []
    remaining = n
    while remaining > 0:
        batch = max(2 * remaining, 64)
        u = rng.uniform(0.0, 2.0 * np.pi, size=batch)
        v = rng.uniform(0.0, 2.0 * np.pi, size=batch)
        w = rng.uniform(0.0, 1.0, size=batch)
        # Surface density is proportional to R + r cos(v).
        accept = w < (big + small * np.cos(v)) / (big + small)
        u, v = u[accept][:remaining], v[accept][:remaining]
        u_kept.append(u)
        v_kept.append(v)
        remaining -= u.size
    u = np.concatenate(u_kept)
    v = np.concatenate(v_kept)
    ring = big + small * np.cos(v)
    return np.stack([ring * np.cos(u), ring * np.sin(u), small * np.sin(v)], axis=1)


_SAMPLERS = {
    "sphere": _sample_sphere,
    "cube": _sample_cube,
    "torus": _sample_torus,
}


def generate(spec: ShapeSpec) -> PointCloud:
    """Sample ``spec.count`` points uniformly on the surface of a shape.

    Args:
        spec: Shape kind, point count and seed.

    Returns:
        A new PointCloud inside [-1, 1]^3.

    Raises:
        InvalidArgumentError: If the spec is invalid (checked by ShapeSpec).
    """
    rng = make_rng(spec.seed)
    points = _SAMPLERS[spec.kind](rng, spec.count)
    logger.debug("Generated %d %s points (seed=%d)", spec.count, spec.kind, spec.seed)
    return PointCloud(points)


def crop_size(n: int, keep_ratio: float) -> int:
    """Number of points kept by a crop: ``ceil(keep_ratio * n)``.

    The product is taken on the shortest decimal form of ``keep_ratio``, so
    0.07 of 100 points is 7 even though the float product is 7.000000000000001.
    """
    return min(n, max(1, math.ceil(Fraction(repr(float(keep_ratio))) * n)))


def crop(pc: PointCloud, spec: CropSpec) -> PointCloud:
    """Keep the points with the smallest projection on ``spec.direction``.

    Args:
        pc: Cloud to crop.
        spec: Direction and keep ratio.

    Returns:
        The ``ceil(keep_ratio * |pc|)`` kept points, in their original order.
    """
    p = pc.points
    dx, dy, dz = spec.direction
    projection = (p[:, 0] * dx + p[:, 1] * dy) + p[:, 2] * dz
    k = crop_size(len(pc), spec.keep_ratio)
    kept = np.sort(np.argsort(projection, kind="stable")[:k])
    return PointCloud(p[kept])


def parse_xyz(text: str, path: Optional[str] = None) -> PointCloud:
    """Parse XYZ text: one point per line, three floats separated by whitespace.

    Blank lines and lines starting with ``#`` are skipped.

    Raises:
        CloudParseError: On a malformed line, carrying its 1-based number.
    """
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) != 3:
            raise CloudParseError(f"expected 3 fields, got {len(fields)}", lineno, path)
        rows.append(_parse_coords(fields, lineno, path))
    if not rows:
        raise CloudParseError("no points found", 0, path)
    return PointCloud(np.array(rows, dtype=np.float64))


def _parse_coords(fields: list[str], lineno: int, path: Optional[str]) -> list[float]:
    coords = []
    for token in fields:
        try:
            value = float(token)
        except ValueError:
            raise CloudParseError(f"cannot parse '{token}' as a number", lineno, path)
        if not math.isfinite(value):
            raise CloudParseError(f"non-finite coordinate '{token}'", lineno, path)
        coords.append(value)
    return coords


def read_xyz(path: Path) -> PointCloud:
    """Read an ASCII XYZ file.

    Args:
        path: File to read.

    Returns:
        The cloud, in file order.

    Raises:
        CloudParseError: If a line is malformed.
        FileNotFoundError: If the file does not exist.
    """
    with open(path, "r") as f:
        return parse_xyz(f.read(), str(path))


def format_xyz(pc: PointCloud) -> str:
    """Render a cloud as XYZ text with shortest round-trip numbers."""
    return "".join(" ".join(format_number(c) for c in row) + "\n" for row in pc.points)


def write_xyz(pc: PointCloud, path: Path) -> Path:
    """Write a cloud as ASCII XYZ; reading it back is bitwise exact."""
    return atomic_write_text(Path(path), format_xyz(pc))


def parse_ply(text: str, path: Optional[str] = None) -> PointCloud:
    """Parse an ASCII PLY document, keeping only the x/y/z vertex properties.

    Raises:
        CloudParseError: On an unsupported or malformed header or vertex line.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise CloudParseError("missing 'ply' magic line", 1, path)

    vertex_count = None
    properties: list[str] = []
    in_vertex = False
    header_end = None
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts or parts[0] == "comment" or parts[0] == "obj_info":
            continue
        if parts[0] == "format":
            if len(parts) < 2 or parts[1] != "ascii":
                raise CloudParseError("only 'format ascii 1.0' is supported", lineno, path)
        elif parts[0] == "element":
            if len(parts) != 3:
                raise CloudParseError("malformed element line", lineno, path)
            in_vertex = parts[1] == "vertex"
            if in_vertex:
                try:
                    vertex_count = int(parts[2])
                except ValueError:
                    raise CloudParseError(f"bad vertex count '{parts[2]}'", lineno, path)
        elif parts[0] == "property":
            if in_vertex:
                if parts[1] == "list":
                    raise CloudParseError("list properties on vertices are not supported", lineno, path)
                properties.append(parts[-1])
        elif parts[0] == "end_header":
            header_end = lineno
            break
        else:
            raise CloudParseError(f"unexpected header keyword '{parts[0]}'", lineno, path)

    if header_end is None:
        raise CloudParseError("missing end_header", len(lines), path)
    if vertex_count is None:
        raise CloudParseError("missing 'element vertex' declaration", header_end, path)
    try:
        columns = [properties.index(axis) for axis in ("x", "y", "z")]
    except ValueError:
        raise CloudParseError("vertex element needs x, y and z properties", header_end, path)

    rows = []
    lineno = header_end
    for line in lines[header_end:]:
        lineno += 1
        if len(rows) == vertex_count:
            break
        fields = line.split()
        if not fields:
            continue
        if len(fields) != len(properties):
            raise CloudParseError(
                f"expected {len(properties)} vertex fields, got {len(fields)}", lineno, path
            )
        rows.append(_parse_coords([fields[c] for c in columns], lineno, path))
    if len(rows) != vertex_count:
        raise CloudParseError(f"expected {vertex_count} vertices, found {len(rows)}", lineno, path)
    if not rows:
        raise CloudParseError("no points found", lineno, path)
    return PointCloud(np.array(rows, dtype=np.float64))


def read_ply(path: Path) -> PointCloud:
    """Read the vertices of an ASCII PLY file."""
    with open(path, "r") as f:
        return parse_ply(f.read(), str(path))


def read_cloud(path: Path) -> PointCloud:
    """Read a cloud, choosing PLY or XYZ by file suffix."""
    if Path(path).suffix.lower() == ".ply":
        return read_ply(path)
    return read_xyz(path)
