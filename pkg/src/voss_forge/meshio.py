"""Mesh export for sampled nets: OBJ quads, binary PLY and CSV."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .grids import SurfaceGrid

FORMATS = ("obj", "ply", "csv")


def _quads(nu: int, nv: int) -> np.ndarray:
    """Zero-based quad corners in row-major vertex order (index ``i*nv + j``)."""
    i, j = np.meshgrid(np.arange(nu - 1), np.arange(nv - 1), indexing="ij")
    a = (i * nv + j).ravel()
    return np.stack([a, a + nv, a + nv + 1, a + 1], axis=1)


def obj_bytes(surface: SurfaceGrid) -> bytes:
    P = surface.positions.reshape(-1, 3)
    out = io.StringIO()
    out.write(f"# voss_forge net {surface.spec.nu}x{surface.spec.nv}\n")
    for x, y, z in P:
        out.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
    for q in _quads(surface.spec.nu, surface.spec.nv) + 1:
        out.write(f"f {q[0]} {q[1]} {q[2]} {q[3]}\n")
    return out.getvalue().encode("ascii")


def ply_bytes(surface: SurfaceGrid) -> bytes:
    P = surface.positions.reshape(-1, 3).astype("<f8")
    Q = _quads(surface.spec.nu, surface.spec.nv)
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        f"element vertex {len(P)}\nproperty double x\nproperty double y\nproperty double z\n"
        f"element face {len(Q)}\nproperty list uchar int vertex_indices\nend_header\n"
    ).encode("ascii")
    faces = np.zeros(len(Q), dtype=[("n", "u1"), ("idx", "<i4", (4,))])
    faces["n"] = 4
    faces["idx"] = Q
    return header + P.tobytes() + faces.tobytes()


def csv_bytes(surface: SurfaceGrid) -> bytes:
    U, V = surface.spec.mesh()
    out = io.StringIO()
    out.write("u,v,x,y,z\n")
    P = surface.positions
    for idx in np.ndindex(U.shape):
        x, y, z = P[idx]
        out.write(f"{float(U[idx])!r},{float(V[idx])!r},{float(x)!r},{float(y)!r},{float(z)!r}\n")
    return out.getvalue().encode("ascii")


def write_mesh(surface: SurfaceGrid, path, fmt: str | None = None) -> str:
    """Write ``surface`` to ``path``; the format defaults to the file suffix."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    writers = {"obj": obj_bytes, "ply": ply_bytes, "csv": csv_bytes}
    if fmt not in writers:
        raise ValueError(f"unknown mesh format {fmt!r}; use one of {', '.join(FORMATS)}")
    path.write_bytes(writers[fmt](surface))
    return fmt


def read_ply(path) -> tuple[np.ndarray, np.ndarray]:
    """Vertices and quad faces of a file written by :func:`ply_bytes`."""
    data = Path(path).read_bytes()
    end = data.index(b"end_header\n") + len(b"end_header\n")
    lines = data[:end].decode("ascii").splitlines()
    nverts = int(next(ln for ln in lines if ln.startswith("element vertex")).split()[-1])
    nfaces = int(next(ln for ln in lines if ln.startswith("element face")).split()[-1])
    verts = np.frombuffer(data, "<f8", nverts * 3, end).reshape(-1, 3)
    faces = np.frombuffer(data, [("n", "u1"), ("idx", "<i4", (4,))], nfaces, end + 24 * nverts)
    return verts, faces["idx"]
