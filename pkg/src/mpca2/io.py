"""File formats.

MT2 binary matrices
    16-byte little-endian header ``b"MT2\\0", u32 p, u32 q, u32 n`` followed
    by ``n*p*q`` float64 values, each sample stored column-major.
CSV
    One sample per row, holding its column-major vec.
PGM
    Binary (P5) grayscale, ``maxval <= 65535``; pixels are scaled to [0, 1]
    on ingestion.
Basis files (``.mbz``)
    ``b"MBZ\\0"``, u32 header length, a UTF-8 JSON header, then the MT2
    blocks named in ``header["blocks"]`` in order.
Model specs
    JSON with the matrices stored as base64-encoded MT2 blocks.
"""

from __future__ import annotations

import base64
import json
import re
import struct
from pathlib import Path

import numpy as np

from .baselines import PcaBasis, TwoDPcaBasis
from .errors import ValidationError
from .glram import MpcaBasis
from .linalg import MatrixDataset
from .simulator import ModelSpec

MT2_MAGIC = b"MT2\x00"
MBZ_MAGIC = b"MBZ\x00"
_HEADER = struct.Struct("<4sIII")


def encode_matrices(samples):
    """Encode an ``(n, p, q)`` array (or a single matrix) as an MT2 block."""
    X = np.asarray(samples, dtype=float)
    if X.ndim == 2:
        X = X[None]
    n, p, q = X.shape
    body = np.ascontiguousarray(X.transpose(0, 2, 1)).astype("<f8").tobytes()
    return _HEADER.pack(MT2_MAGIC, p, q, n) + body


def decode_matrices(buf, offset=0):
    """Decode one MT2 block; returns ``(array of shape (n, p, q), end offset)``."""
    if len(buf) - offset < _HEADER.size:
        raise ValidationError("truncated MT2 header")
    magic, p, q, n = _HEADER.unpack_from(buf, offset)
    if magic != MT2_MAGIC:
        raise ValidationError(f"bad MT2 magic {magic!r}")
    start = offset + _HEADER.size
    end = start + 8 * n * p * q
    if len(buf) < end:
        raise ValidationError(f"truncated MT2 payload: need {end - start} bytes, have {len(buf) - start}")
    X = np.frombuffer(buf, dtype="<f8", count=n * p * q, offset=start)
    return X.reshape(n, q, p).transpose(0, 2, 1).astype(float), end


def write_bin(path, data):
    samples = data.samples if isinstance(data, MatrixDataset) else data
    Path(path).write_bytes(encode_matrices(samples))


def read_bin(path):
    buf = Path(path).read_bytes()
    X, end = decode_matrices(buf)
    if end != len(buf):
        raise ValidationError(f"{path}: {len(buf) - end} trailing bytes after MT2 payload")
    return MatrixDataset(X)


def _parse_shape(shape):
    if shape is None or isinstance(shape, tuple):
        return shape
    m = re.fullmatch(r"\s*(\d+)\s*[xX,]\s*(\d+)\s*", str(shape))
    if not m:
        raise ValidationError(f"cannot parse shape {shape!r}; expected PxQ")
    return int(m.group(1)), int(m.group(2))


def read_csv(path, shape=None):
    """Read vec'd samples, one per row.  Square shape is inferred if not given."""
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    m = rows.shape[1]
    shape = _parse_shape(shape)
    if shape is None:
        s = int(round(np.sqrt(m)))
        if s * s != m:
            raise ValidationError(f"{path}: rows of length {m} are not square; pass a shape")
        shape = (s, s)
    p, q = shape
    if p * q != m:
        raise ValidationError(f"{path}: rows of length {m} do not match shape {p}x{q}")
    return MatrixDataset(rows.reshape(-1, q, p).transpose(0, 2, 1))


def write_csv(path, data):
    samples = data.samples if isinstance(data, MatrixDataset) else np.asarray(data)
    n, p, q = samples.shape
    np.savetxt(path, samples.transpose(0, 2, 1).reshape(n, p * q), delimiter=",", fmt="%.17g")


def _pgm_tokens(buf, count):
    tokens = []
    i = 0
    while len(tokens) < count:
        while i < len(buf) and buf[i : i + 1].isspace():
            i += 1
        if i < len(buf) and buf[i : i + 1] == b"#":
            while i < len(buf) and buf[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(buf) and not buf[j : j + 1].isspace() and buf[j : j + 1] != b"#":
            j += 1
        if j == i:
            raise ValidationError("truncated PGM header")
        tokens.append(buf[i:j])
        i = j
    # exactly one whitespace byte separates the header from the raster
    return tokens, i + 1


def read_pgm(path):
    """Read a binary PGM image as floats in [0, 1]."""
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise ValidationError(f"{path}: unsupported PGM variant {buf[:2]!r} (only binary P5)")
    try:
        (_, w, h, maxval), start = _pgm_tokens(buf, 4)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise ValidationError(f"{path}: malformed PGM header") from exc
    if not 0 < maxval <= 65535:
        raise ValidationError(f"{path}: maxval {maxval} out of range")
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    size = w * h * dtype.itemsize
    if len(buf) - start < size:
        raise ValidationError(f"{path}: truncated raster")
    img = np.frombuffer(buf, dtype=dtype, count=w * h, offset=start).reshape(h, w)
    return img.astype(float) / maxval


def write_pgm(path, img, maxval=255):
    img = np.clip(np.asarray(img, dtype=float), 0.0, 1.0)
    h, w = img.shape
    dtype = "u1" if maxval < 256 else ">u2"
    raster = np.rint(img * maxval).astype(dtype).tobytes()
    Path(path).write_bytes(f"P5\n{w} {h}\n{maxval}\n".encode("ascii") + raster)


def _natural_key(path):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", str(path))]


def read_pgm_dir(path):
    files = sorted(Path(path).rglob("*.pgm"), key=_natural_key)
    if not files:
        raise ValidationError(f"{path}: no .pgm files found")
    images = [read_pgm(f) for f in files]
    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise ValidationError(f"{path}: inconsistent image shapes {sorted(shapes)}")
    return MatrixDataset(np.stack(images))


def ingest(path, fmt=None, shape=None):
    """Load a dataset from a PGM directory, CSV file or MT2 binary file.

    ``fmt`` is one of ``"pgm-dir"``, ``"csv"``, ``"bin"``; when omitted it
    is guessed from the path.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: no such file or directory")
    if fmt is None:
        fmt = "pgm-dir" if path.is_dir() else ("csv" if path.suffix.lower() == ".csv" else "bin")
    if fmt == "pgm-dir":
        return read_pgm_dir(path)
    if fmt == "csv":
        return read_csv(path, shape)
    if fmt == "bin":
        return read_bin(path)
    raise ValidationError(f"unknown format {fmt!r}")


def _pack(header, blocks):
    header = dict(header, blocks=[name for name, _ in blocks])
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    body = b"".join(encode_matrices(arr) for _, arr in blocks)
    return MBZ_MAGIC + struct.pack("<I", len(head)) + head + body


def _unpack(buf):
    if buf[:4] != MBZ_MAGIC:
        raise ValidationError("not a basis file (bad magic)")
    (size,) = struct.unpack_from("<I", buf, 4)
    header = json.loads(buf[8 : 8 + size].decode("utf-8"))
    offset = 8 + size
    blocks = {}
    for name in header["blocks"]:
        arr, offset = decode_matrices(buf, offset)
        blocks[name] = arr[0]
    return header, blocks


def save_basis(path, basis, mean, config=None):
    """Persist a fitted basis and the centering mean it was fitted with."""
    mean = np.asarray(mean, dtype=float)
    header = {"shape": list(mean.shape), "config": config or {}}
    if isinstance(basis, MpcaBasis):
        header.update(
            kind="mpca",
            lam=[float(v) for v in basis.lam],
            xi=[float(v) for v in basis.xi],
            objective_trace=[float(v) for v in basis.objective_trace],
            converged=bool(basis.converged),
            restart_objectives=[float(v) for v in basis.restart_objectives],
            best_restart=int(basis.best_restart),
        )
        blocks = [("A", basis.A), ("B", basis.B), ("mean", mean)]
    elif isinstance(basis, TwoDPcaBasis):
        header.update(
            kind="2d2pca",
            lam=[float(v) for v in basis.lam_star],
            xi=[float(v) for v in basis.xi_star],
        )
        blocks = [("A", basis.Astar), ("B", basis.Bstar), ("mean", mean)]
    elif isinstance(basis, PcaBasis):
        header.update(kind="pca", eigenvalues=[float(v) for v in basis.eigenvalues])
        blocks = [("loadings", basis.loadings), ("mean", mean)]
    else:
        raise ValidationError(f"cannot save basis of type {type(basis).__name__}")
    Path(path).write_bytes(_pack(header, blocks))


def load_basis(path):
    """Inverse of :func:`save_basis`; returns ``(basis, mean, header)``."""
    header, blocks = _unpack(Path(path).read_bytes())
    kind = header.get("kind")
    if kind == "mpca":
        basis = MpcaBasis(
            blocks["A"],
            blocks["B"],
            np.array(header["lam"]),
            np.array(header["xi"]),
            header["objective_trace"],
            header["converged"],
            header.get("restart_objectives", []),
            header.get("best_restart", 0),
        )
    elif kind == "2d2pca":
        basis = TwoDPcaBasis(blocks["A"], blocks["B"], np.array(header["lam"]), np.array(header["xi"]))
    elif kind == "pca":
        basis = PcaBasis(blocks["loadings"], np.array(header["eigenvalues"]))
    else:
        raise ValidationError(f"{path}: unknown basis kind {kind!r}")
    return basis, blocks["mean"], header


def _b64(arr):
    return base64.b64encode(encode_matrices(arr)).decode("ascii")


def _unb64(text):
    arr, _ = decode_matrices(base64.b64decode(text))
    return arr[0]


def spec_to_json(spec):
    p, q = spec.shape
    p0, q0 = spec.true_dims
    doc = {
        "p": p,
        "q": q,
        "p0": p0,
        "q0": q0,
        "sigma2": spec.sigma2,
        "mu": _b64(spec.mu),
        "A0": _b64(spec.A0),
        "B0": _b64(spec.B0),
        "T": _b64(spec.T),
    }
    return json.dumps(doc, indent=2)


def spec_from_json(text):
    try:
        doc = json.loads(text)
        return ModelSpec(_unb64(doc["mu"]), _unb64(doc["A0"]), _unb64(doc["B0"]), _unb64(doc["T"]), doc["sigma2"])
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed spec: {exc}") from exc


def save_spec(path, spec):
    Path(path).write_text(spec_to_json(spec))


def load_spec(path):
    return spec_from_json(Path(path).read_text())
