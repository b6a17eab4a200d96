"""Serialization: the SPL depth-array container plus OBJ/PLY/XYZ interchange.

SPL is a little-endian binary layout, normative and bit-exact:

    offset  size  field
    0       4     magic "SPLT"
    4       2     version (u16, currently 1)
    6       4     primary viewpoint count N (u32)
    10      4     rays per viewpoint M (u32)
    14      8     opening angle in radians (f64)
    22      24    frame center x, y, z (3 x f64)
    46      8     frame radius (f64)
    54      8     model digest (8 bytes)
    62      4*N*M depths (f32), primary-major order

Depths are stored as float32: they live in [0, 1] where the 24-bit mantissa
resolves far below any geometric tolerance used elsewhere, at half the
storage. Mesh interchange covers OBJ (polygons fan-triangulated, negative
indices resolved per the OBJ convention) and PLY (ascii and
binary_little_endian, positions and faces only); point clouds round-trip
through PLY or plain-text XYZ.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import BoundingSphere, PointCloud, TriangleMesh
from .model import DepthArray, SpotlightsModel, model_digest

__all__ = [
    "SplFormatError",
    "ParseError",
    "SplHeader",
    "write_spl",
    "read_spl",
    "load_mesh",
    "save_mesh",
    "load_cloud",
    "save_cloud",
]

SPL_MAGIC = b"SPLT"
SPL_VERSION = 1
_HEADER = struct.Struct("<4sHIId3dd8s")
assert _HEADER.size == 62


class SplFormatError(ValueError):
    """Raised for malformed or inconsistent SPL files."""


class ParseError(ValueError):
    """Raised for malformed mesh/cloud files; messages carry line numbers."""


@dataclass(frozen=True)
class SplHeader:
    n_primary: int
    m_secondary: int
    opening_angle: float
    frame: BoundingSphere
    model_id: bytes


def write_spl(path, model: SpotlightsModel, depths: DepthArray) -> None:
    """Write a depth array with its model descriptor. Refuses arrays that do
    not belong to the given model."""
    if depths.model_id != model.model_id:
        raise SplFormatError("model mismatch: depth array belongs to a different arrangement")
    if len(depths) != model.n_rays:
        raise SplFormatError("model mismatch: depth count differs from model ray count")
    header = _HEADER.pack(
        SPL_MAGIC,
        SPL_VERSION,
        model.n_primary,
        model.m_secondary,
        model.opening_angle,
        *depths.frame.center,
        depths.frame.radius,
        depths.model_id,
    )
    payload = depths.values.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_spl(path) -> tuple[SplHeader, DepthArray]:
    """Read and validate an SPL file.

    Every corruption class yields a distinct error: bad magic, unsupported
    version, truncated payload, out-of-range depths, and a model digest that
    does not match the header descriptor.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SplFormatError("payload truncated: file shorter than the fixed header")
    magic, version, n_primary, m_secondary, omega, cx, cy, cz, radius, digest = _HEADER.unpack_from(raw)
    if magic != SPL_MAGIC:
        raise SplFormatError(f"bad magic {magic!r}")
    if version != SPL_VERSION:
        raise SplFormatError(f"version unsupported: {version}")
    if n_primary < 1 or m_secondary < 1:
        raise SplFormatError("header counts must be positive")
    expected = _HEADER.size + 4 * n_primary * m_secondary
    if len(raw) < expected:
        raise SplFormatError(
            f"payload truncated: expected {expected} bytes, file has {len(raw)}"
        )
    if len(raw) > expected:
        raise SplFormatError(f"unexpected trailing data: {len(raw) - expected} bytes")
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).astype(np.float64)
    if not np.isfinite(values).all() or values.min() < 0.0 or values.max() > 1.0:
        raise SplFormatError("depth out of range: values must lie in [0, 1]")
    if digest != model_digest(n_primary, m_secondary, omega):
        raise SplFormatError("model mismatch: stored digest does not match the descriptor")
    if radius <= 0.0 or not np.isfinite(radius):
        raise SplFormatError("frame radius must be positive")
    frame = BoundingSphere(np.array([cx, cy, cz]), radius)
    header = SplHeader(n_primary, m_secondary, omega, frame, digest)
    return header, DepthArray(values, model_id=digest, frame=frame)


# ---------------------------------------------------------------------------
# OBJ


def _parse_obj_index(token: str, n_vertices: int, path, lineno: int) -> int:
    head = token.split("/", 1)[0]
    try:
        idx = int(head)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: bad face index {token!r}") from None
    if idx > 0:
        idx -= 1
    elif idx < 0:
        idx += n_vertices  # relative to the vertices seen so far
    else:
        raise ParseError(f"{path}:{lineno}: face index 0 is not allowed")
    if not 0 <= idx < n_vertices:
        raise ParseError(f"{path}:{lineno}: face index {token!r} out of range")
    return idx


def _load_obj(path) -> TriangleMesh:
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if tokens[0] == "v":
                if len(tokens) < 4:
                    raise ParseError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append([float(t) for t in tokens[1:4]])
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: bad vertex coordinate") from None
            elif tokens[0] == "f":
                if len(tokens) < 4:
                    raise ParseError(f"{path}:{lineno}: face needs at least 3 vertices")
                idx = [_parse_obj_index(t, len(vertices), path, lineno) for t in tokens[1:]]
                for k in range(1, len(idx) - 1):  # fan triangulation
                    faces.append((idx[0], idx[k], idx[k + 1]))
            # vt/vn/usemtl/o/g/s/mtllib are ignored: positions and faces only
    if not vertices:
        raise ParseError(f"{path}:1: no vertices found")
    return TriangleMesh(np.asarray(vertices), np.asarray(faces, dtype=np.int64).reshape(-1, 3))


def _save_obj(path, mesh: TriangleMesh) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


# ---------------------------------------------------------------------------
# PLY

_PLY_SCALARS = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


@dataclass
class _PlyElement:
    name: str
    count: int
    properties: list[tuple[str, str]]  # (kind, name); kind "list:count:item" for lists


def _parse_ply_header(fh, path):
    line = fh.readline()
    lineno = 1
    if line.strip() != b"ply":
        raise ParseError(f"{path}:1: not a PLY file")
    fmt = None
    elements: list[_PlyElement] = []
    while True:
        line = fh.readline()
        lineno += 1
        if not line:
            raise ParseError(f"{path}:{lineno}: unexpected end of header")
        tokens = line.decode("ascii", errors="replace").split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] not in ("ascii", "binary_little_endian"):
                raise ParseError(
                    f"{path}:{lineno}: unsupported PLY format {' '.join(tokens[1:])!r}"
                )
            fmt = tokens[1]
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise ParseError(f"{path}:{lineno}: malformed element declaration")
            try:
                elements.append(_PlyElement(tokens[1], int(tokens[2]), []))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad element count") from None
        elif tokens[0] == "property":
            if not elements:
                raise ParseError(f"{path}:{lineno}: property before any element")
            if tokens[1] == "list":
                if len(tokens) != 5 or tokens[2] not in _PLY_SCALARS or tokens[3] not in _PLY_SCALARS:
                    raise ParseError(f"{path}:{lineno}: malformed list property")
                elements[-1].properties.append(
                    (f"list:{_PLY_SCALARS[tokens[2]]}:{_PLY_SCALARS[tokens[3]]}", tokens[4])
                )
            else:
                if len(tokens) != 3 or tokens[1] not in _PLY_SCALARS:
                    raise ParseError(f"{path}:{lineno}: unsupported property type {tokens[1]!r}")
                elements[-1].properties.append((_PLY_SCALARS[tokens[1]], tokens[2]))
        elif tokens[0] == "end_header":
            break
        else:
            raise ParseError(f"{path}:{lineno}: unknown header line {tokens[0]!r}")
    if fmt is None:
        raise ParseError(f"{path}: missing format line in header")
    return fmt, elements, lineno


def _read_ply(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read vertex positions and faces (or None) from a PLY file."""
    with open(path, "rb") as fh:
        fmt, elements, lineno = _parse_ply_header(fh, path)
        body = fh.read()

    vertices = None
    faces: list[tuple[int, ...]] | None = None
    offset = 0
    ascii_rows = body.decode("ascii", errors="replace").splitlines() if fmt == "ascii" else None
    row_at = 0

    for element in elements:
        scalar_only = all(not k.startswith("list:") for k, _ in element.properties)
        if fmt == "ascii":
            rows = ascii_rows[row_at : row_at + element.count]
            if len(rows) < element.count:
                raise ParseError(f"{path}: {element.name} element truncated")
            row_at += element.count
            parsed = _parse_ascii_element(element, rows, path, lineno)
        else:
            parsed, offset = _parse_binary_element(element, body, offset, path)
        if element.name == "vertex":
            vertices = _extract_positions(element, parsed, path)
        elif element.name == "face":
            faces = _extract_faces(element, parsed, path)
        # other elements (edges, materials) are skipped after parsing
        del scalar_only
    if vertices is None:
        raise ParseError(f"{path}: no vertex element")
    tris = None
    if faces is not None:
        tri_list: list[tuple[int, int, int]] = []
        for poly in faces:
            if len(poly) < 3:
                raise ParseError(f"{path}: face with fewer than 3 vertices")
            for k in range(1, len(poly) - 1):
                tri_list.append((poly[0], poly[k], poly[k + 1]))
        tris = np.asarray(tri_list, dtype=np.int64).reshape(-1, 3)
    return vertices, tris


def _parse_ascii_element(element, rows, path, header_lines):
    out = []
    for i, row in enumerate(rows):
        tokens = row.split()
        values: dict[str, object] = {}
        pos = 0
        for kind, name in element.properties:
            try:
                if kind.startswith("list:"):
                    n = int(tokens[pos])
                    pos += 1
                    values[name] = tuple(int(float(t)) for t in tokens[pos : pos + n])
                    pos += n
                else:
                    values[name] = float(tokens[pos])
                    pos += 1
            except (ValueError, IndexError):
                raise ParseError(
                    f"{path}:{header_lines + 1 + i}: malformed {element.name} row"
                ) from None
        out.append(values)
    return out


def _parse_binary_element(element, body, offset, path):
    out = []
    for _ in range(element.count):
        values: dict[str, object] = {}
        for kind, name in element.properties:
            if kind.startswith("list:"):
                _, count_t, item_t = kind.split(":")
                cdt = np.dtype("<" + count_t)
                if offset + cdt.itemsize > len(body):
                    raise ParseError(f"{path}: {element.name} element truncated")
                n = int(np.frombuffer(body, cdt, count=1, offset=offset)[0])
                offset += cdt.itemsize
                idt = np.dtype("<" + item_t)
                if offset + n * idt.itemsize > len(body):
                    raise ParseError(f"{path}: {element.name} element truncated")
                values[name] = tuple(
                    int(x) for x in np.frombuffer(body, idt, count=n, offset=offset)
                )
                offset += n * idt.itemsize
            else:
                dt = np.dtype("<" + kind)
                if offset + dt.itemsize > len(body):
                    raise ParseError(f"{path}: {element.name} element truncated")
                values[name] = float(np.frombuffer(body, dt, count=1, offset=offset)[0])
                offset += dt.itemsize
        out.append(values)
    return out, offset


def _extract_positions(element, parsed, path) -> np.ndarray:
    names = [n for _, n in element.properties]
    for axis in ("x", "y", "z"):
        if axis not in names:
            raise ParseError(f"{path}: vertex element lacks property {axis!r}")
    return np.array([[row["x"], row["y"], row["z"]] for row in parsed], dtype=np.float64).reshape(
        -1, 3
    )


def _extract_faces(element, parsed, path):
    list_names = [n for k, n in element.properties if k.startswith("list:")]
    if not list_names:
        raise ParseError(f"{path}: face element lacks an index list property")
    name = "vertex_indices" if "vertex_indices" in list_names else list_names[0]
    return [row[name] for row in parsed]


def _save_ply(path, vertices: np.ndarray, triangles: np.ndarray | None, ascii_format: bool) -> None:
    n = len(vertices)
    fmt = "ascii" if ascii_format else "binary_little_endian"
    header = [
        "ply",
        f"format {fmt} 1.0",
        f"element vertex {n}",
        "property float x",
        "property float y",
        "property float z",
    ]
    if triangles is not None:
        header += [
            f"element face {len(triangles)}",
            "property list uchar int vertex_indices",
        ]
    header.append("end_header")
    v32 = vertices.astype("<f4")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if ascii_format:
            for v in v32:
                fh.write(f"{v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n".encode("ascii"))
            if triangles is not None:
                for t in triangles:
                    fh.write(f"3 {t[0]} {t[1]} {t[2]}\n".encode("ascii"))
        else:
            fh.write(v32.tobytes())
            if triangles is not None:
                face_dt = np.dtype([("n", "u1"), ("idx", "<i4", (3,))])
                rec = np.empty(len(triangles), dtype=face_dt)
                rec["n"] = 3
                rec["idx"] = triangles
                fh.write(rec.tobytes())


# ---------------------------------------------------------------------------
# public mesh / cloud API


def load_mesh(path) -> TriangleMesh:
    """Load an OBJ or PLY mesh; polygons are fan-triangulated."""
    p = str(path)
    if p.lower().endswith(".obj"):
        return _load_obj(path)
    if p.lower().endswith(".ply"):
        vertices, tris = _read_ply(path)
        if tris is None:
            tris = np.zeros((0, 3), dtype=np.int64)
        return TriangleMesh(vertices, tris)
    raise ParseError(f"{path}: unsupported mesh format (expected .obj or .ply)")


def save_mesh(path, mesh: TriangleMesh, ascii_format: bool = False) -> None:
    """Save a mesh as OBJ or PLY (binary little-endian unless asked for ascii)."""
    p = str(path)
    if p.lower().endswith(".obj"):
        _save_obj(path, mesh)
    elif p.lower().endswith(".ply"):
        _save_ply(path, mesh.vertices, mesh.triangles, ascii_format)
    else:
        raise ParseError(f"{path}: unsupported mesh format (expected .obj or .ply)")


def load_cloud(path) -> PointCloud:
    """Load a point cloud from PLY or plain-text XYZ."""
    p = str(path)
    if p.lower().endswith(".ply"):
        vertices, _ = _read_ply(path)
        return PointCloud(vertices)
    if p.lower().endswith(".xyz"):
        pts = []
        with open(path, "r", encoding="utf-8", errors="replace") as fh:
            for lineno, line in enumerate(fh, start=1):
                tokens = line.split()
                if not tokens or tokens[0].startswith("#"):
                    continue
                if len(tokens) < 3:
                    raise ParseError(f"{path}:{lineno}: expected 3 coordinates")
                try:
                    pts.append([float(t) for t in tokens[:3]])
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: bad coordinate") from None
        return PointCloud(np.asarray(pts, dtype=np.float64).reshape(-1, 3))
    raise ParseError(f"{path}: unsupported cloud format (expected .ply or .xyz)")


def save_cloud(path, cloud: PointCloud, ascii_format: bool = False) -> None:
    """Save a point cloud as PLY (float32, binary little-endian unless ascii
    is requested) or XYZ text (full float64 precision)."""
    p = str(path)
    if p.lower().endswith(".ply"):
        _save_ply(path, cloud.points, None, ascii_format)
    elif p.lower().endswith(".xyz"):
        with open(path, "w", encoding="ascii") as fh:
            for q in cloud.points:
                fh.write(f"{q[0]:.17g} {q[1]:.17g} {q[2]:.17g}\n")
    else:
        raise ParseError(f"{path}: unsupported cloud format (expected .ply or .xyz)")
