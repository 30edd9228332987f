"""File formats: meshes, nodal fields, traces, CQ weight caches, images."""
from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np

from .geometry import TriMesh

FIELD_MAGIC = b"PAFF1\0\0\0"
CQ_MAGIC = b"PACQ1"


class FormatError(ValueError):
    """Malformed or mismatched file content."""


# -- meshes -------------------------------------------------------------------


def write_mesh(path, mesh: TriMesh) -> None:
    with open(path, "w") as fh:
        fh.write(f"MESH2 {mesh.n_vertices} {mesh.n_triangles} {mesh.n_boundary}\n")
        fh.write(f"# h={mesh.h!r} radius={mesh.radius!r}\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")
        for b in mesh.boundary_nodes:
            fh.write(f"{b}\n")


def read_mesh(path) -> TriMesh:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    if len(head) != 4 or head[0] != "MESH2":
        raise FormatError(f"{path}: not a MESH2 file")
    nv, nt, nb = map(int, head[1:])
    meta = {}
    body = lines[1:]
    if body and body[0].startswith("#"):
        for item in body[0][1:].split():
            k, _, v = item.partition("=")
            meta[k] = float(v)
        body = body[1:]
    if len(body) < nv + nt + nb:
        raise FormatError(f"{path}: truncated mesh file")
    verts = np.array([list(map(float, l.split())) for l in body[:nv]])
    tris = np.array([list(map(int, l.split())) for l in body[nv : nv + nt]], dtype=np.int64)
    bnd = np.array([int(l) for l in body[nv + nt : nv + nt + nb]], dtype=np.int64)
    radius = meta.get("radius", float(np.hypot(*verts[bnd[0]])))
    return TriMesh(verts, tris, bnd, meta.get("h", float("nan")), radius)


# -- nodal fields -------------------------------------------------------------


def write_field_binary(path, coefficients: np.ndarray) -> None:
    c = np.ascontiguousarray(coefficients, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<II", c.size, 0))
        fh.write(c.tobytes())


def read_field_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:8] != FIELD_MAGIC:
        raise FormatError(f"{path}: bad field header")
    (count, _) = struct.unpack("<II", raw[8:16])
    if len(raw) != 16 + 8 * count:
        raise FormatError(f"{path}: expected {count} values, file size disagrees")
    return np.frombuffer(raw, dtype="<f8", offset=16).astype(float)


def write_field_csv(path, coords: np.ndarray, values: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for (x, y), v in zip(coords, values):
            fh.write(f"{x:.17g},{y:.17g},{v:.17g}\n")


# -- boundary traces ----------------------------------------------------------


def write_trace(path, values: np.ndarray, dt: float, radius: float) -> None:
    values = np.ascontiguousarray(values, dtype="<f8")
    n_steps, n_b = values.shape
    with open(path, "wb") as fh:
        fh.write(f"PATR1 {n_b} {n_steps - 1} {dt!r} {radius!r}\n".encode())
        fh.write(values.tobytes())


def read_trace(path) -> tuple[np.ndarray, float, float]:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    head = raw[:nl].decode(errors="replace").split() if nl > 0 else []
    if len(head) != 5 or head[0] != "PATR1":
        raise FormatError(f"{path}: not a PATR1 trace file")
    n_b, N = int(head[1]), int(head[2])
    dt, radius = float(head[3]), float(head[4])
    data = raw[nl + 1 :]
    if len(data) != 8 * n_b * (N + 1):
        raise FormatError(f"{path}: payload size does not match header")
    values = np.frombuffer(data, dtype="<f8").reshape(N + 1, n_b).astype(float)
    return values, dt, radius


# -- CQ weight cache ----------------------------------------------------------


def write_cq_cache(path, weights) -> None:
    n_b, N = weights.n_b, weights.N
    with open(path, "wb") as fh:
        fh.write(CQ_MAGIC)
        fh.write(struct.pack("<IIdd", n_b, N, weights.dt, weights.radius))
        for kind in ("V", "K"):
            for n in range(N + 1):
                fh.write(np.ascontiguousarray(weights.matrix(kind, n), dtype="<f8").tobytes())


def read_cq_cache(path, config=None):
    from .cq import CQConfig, CQWeightSet

    with open(path, "rb") as fh:
        if fh.read(5) != CQ_MAGIC:
            raise FormatError(f"{path}: not a PACQ1 file")
        n_b, N, dt, radius = struct.unpack("<IIdd", fh.read(24))
        block = n_b * n_b * (N + 1)
        payload = fh.read()
    if len(payload) != 16 * block:
        raise FormatError(f"{path}: weight cache payload size does not match header")
    data = np.frombuffer(payload, dtype="<f8")
    wv = data[:block].reshape(N + 1, n_b, n_b)
    wk = data[block:].reshape(N + 1, n_b, n_b)
    cfg = config if config is not None else CQConfig(N)
    return CQWeightSet(dt, N, radius, n_b, wv[:, 0, :].copy(), wk[:, 0, :].copy(), cfg)


# -- images -------------------------------------------------------------------


def write_pgm16(path, image: np.ndarray, sidecar: bool = True, label: str = "") -> tuple[float, float]:
    """16-bit binary PGM with linear min-max scaling; NaN pixels map to 0.

    The scaling is written to ``<path>.txt`` so pixel values can be mapped
    back to field values.
    """
    img = np.asarray(image, dtype=float)
    finite = np.isfinite(img)
    lo = float(img[finite].min()) if finite.any() else 0.0
    hi = float(img[finite].max()) if finite.any() else 0.0
    span = hi - lo
    q = np.zeros(img.shape, dtype=">u2")
    if span > 0:
        q[finite] = np.rint((img[finite] - lo) / span * 65535.0).astype(">u2")
    rows, cols = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode())
        fh.write(q.tobytes())
    if sidecar:
        with open(str(path) + ".txt", "w") as fh:
            fh.write(f"min = {lo!r}\nmax = {hi!r}\nmaxval = 65535\nscaling = linear\n")
            if label:
                fh.write(f"label = {label}\n")
    return lo, hi


def read_pgm16(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    # exactly one whitespace byte separates maxval from the pixels
    head = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if head is None or int(head.group(3)) != 65535:
        raise FormatError(f"{path}: not a 16-bit P5 image")
    cols, rows = int(head.group(1)), int(head.group(2))
    body = raw[head.end() :]
    if len(body) != 2 * rows * cols:
        raise FormatError(f"{path}: pixel payload size does not match header")
    return np.frombuffer(body, dtype=">u2").reshape(rows, cols)
