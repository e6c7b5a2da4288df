"""On-disk formats: TSV3 tensors, TSM3 masks, CSV tables, and reshaping of
higher-order arrays into third-order tensors.

TSV3 layout (little-endian)::

    magic  b"TSV3"   4 bytes
    version          u16  (1)
    dtype            u16  (1 = f64)
    n1, n2, n3       u64 each
    payload          n1*n2*n3 f64, frontal slice k outermost, then row i, then column j

TSM3 layout (little-endian)::

    magic  b"TSM3"   4 bytes
    version          u16  (1)
    kind             u16  (0 = entrywise, 1 = tubal)
    n1, n2, n3       u64 each
    p                f64
    seed             u64
    bitset           packed bits, LSB first; entrywise masks use the tensor
                     payload order, tubal masks are n1*n2 bits in row-major order
"""

import csv
import struct

import numpy as np

from ._validation import check_tensor
from .sampling import ENTRYWISE, TUBAL, SampleMask

TENSOR_MAGIC = b"TSV3"
MASK_MAGIC = b"TSM3"
VERSION = 1
DTYPE_F64 = 1
_TENSOR_HEADER = struct.Struct("<4sHHQQQ")
_MASK_HEADER = struct.Struct("<4sHHQQQdQ")
_KIND_CODES = {ENTRYWISE: 0, TUBAL: 1}


class TensorFormatError(ValueError):
    """Malformed or truncated tensor/mask file."""


def tensor_to_bytes(A):
    A = check_tensor(A)
    n1, n2, n3 = A.shape
    header = _TENSOR_HEADER.pack(TENSOR_MAGIC, VERSION, DTYPE_F64, n1, n2, n3)
    payload = np.ascontiguousarray(A.transpose(2, 0, 1), dtype="<f8").tobytes()
    return header + payload


def tensor_from_bytes(buf):
    if len(buf) < _TENSOR_HEADER.size:
        raise TensorFormatError("payload mismatch: file shorter than header")
    magic, version, dtype, n1, n2, n3 = _TENSOR_HEADER.unpack_from(buf)
    if magic != TENSOR_MAGIC:
        raise TensorFormatError("not a tensor file (bad magic)")
    if version != VERSION:
        raise TensorFormatError(f"unsupported version {version}")
    if dtype != DTYPE_F64:
        raise TensorFormatError(f"unsupported dtype code {dtype}")
    expected = n1 * n2 * n3 * 8
    payload = buf[_TENSOR_HEADER.size:]
    if len(payload) != expected:
        raise TensorFormatError(
            f"payload mismatch: expected {expected} bytes, found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f8").reshape(n3, n1, n2)
    return np.ascontiguousarray(data.transpose(1, 2, 0), dtype=float)


def write_tensor(path, A):
    with open(path, "wb") as fh:
        fh.write(tensor_to_bytes(A))


def read_tensor(path):
    with open(path, "rb") as fh:
        return tensor_from_bytes(fh.read())


def mask_to_bytes(mask):
    n1, n2, n3 = mask.shape
    header = _MASK_HEADER.pack(
        MASK_MAGIC, VERSION, _KIND_CODES[mask.kind], n1, n2, n3, float(mask.p), int(mask.seed)
    )
    if mask.kind == ENTRYWISE:
        bits = mask.membership.transpose(2, 0, 1).ravel()
    else:
        bits = mask.membership.ravel()
    return header + np.packbits(bits, bitorder="little").tobytes()


def mask_from_bytes(buf):
    if len(buf) < _MASK_HEADER.size:
        raise TensorFormatError("payload mismatch: file shorter than header")
    magic, version, kind, n1, n2, n3, p, seed = _MASK_HEADER.unpack_from(buf)
    if magic != MASK_MAGIC:
        raise TensorFormatError("not a mask file (bad magic)")
    if version != VERSION:
        raise TensorFormatError(f"unsupported version {version}")
    kinds = {v: k for k, v in _KIND_CODES.items()}
    if kind not in kinds:
        raise TensorFormatError(f"unknown mask kind code {kind}")
    kind = kinds[kind]
    nbits = n1 * n2 * n3 if kind == ENTRYWISE else n1 * n2
    payload = buf[_MASK_HEADER.size:]
    if len(payload) != (nbits + 7) // 8:
        raise TensorFormatError(
            f"payload mismatch: expected {(nbits + 7) // 8} bytes, found {len(payload)}"
        )
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=nbits,
                         bitorder="little").astype(bool)
    if kind == ENTRYWISE:
        membership = np.ascontiguousarray(bits.reshape(n3, n1, n2).transpose(1, 2, 0))
    else:
        membership = bits.reshape(n1, n2)
    return SampleMask(kind, (n1, n2, n3), membership, p, seed)


def write_mask(path, mask):
    with open(path, "wb") as fh:
        fh.write(mask_to_bytes(mask))


def read_mask(path):
    with open(path, "rb") as fh:
        return mask_from_bytes(fh.read())


def write_factors(directory, factors):
    """Write ``U``, ``S`` and ``V`` of a t-SVD as ``U.tsv3``, ``S.tsv3``, ``V.tsv3``."""
    import os

    os.makedirs(directory, exist_ok=True)
    for name in ("U", "S", "V"):
        write_tensor(os.path.join(directory, f"{name}.tsv3"), getattr(factors, name))


def read_factors(directory):
    import os

    from .tsvd import TSvdFactors

    U, S, V = (read_tensor(os.path.join(directory, f"{n}.tsv3")) for n in "USV")
    return TSvdFactors(U, S, V, U.shape[1])


def format_value(v):
    """Text form used in every CSV written by this package (round-trips floats)."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_export(rows, path, columns=None):
    """Write a list of dicts (or objects with ``as_rows()``) to ``path``."""
    if hasattr(rows, "as_rows"):
        rows = rows.as_rows()
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c, "")) for c in columns])


def csv_import(path):
    """Read a CSV back as a list of dicts of strings."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def reshape_to_3d(dims, split, data):
    """Fold an order-K array into ``prod(dims[:split]) x prod(dims[split:K-1]) x dims[K-1]``.

    ``data`` is an array of shape ``dims`` or its C-order flattening.
    """
    dims = [int(d) for d in dims]
    K = len(dims)
    if K < 3:
        raise ValueError("need at least three dimensions")
    if not 1 <= split < K - 1:
        raise ValueError(f"split must satisfy 1 <= split < {K - 1}, got {split}")
    data = np.asarray(data, dtype=float)
    if data.size != int(np.prod(dims)):
        raise ValueError(f"data has {data.size} entries, dims {dims} need {int(np.prod(dims))}")
    shape = (int(np.prod(dims[:split])), int(np.prod(dims[split:K - 1])), dims[-1])
    return data.reshape(shape).copy()


def reshape_from_3d(A, dims, split):
    """Inverse of :func:`reshape_to_3d`."""
    dims = [int(d) for d in dims]
    A = np.asarray(A, dtype=float)
    expected = reshape_to_3d(dims, split, np.zeros(dims)).shape
    if A.shape != expected:
        raise ValueError(f"tensor shape {A.shape} does not match {expected}")
    return A.reshape(dims).copy()
