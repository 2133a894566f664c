"""Dense complex tensor operations with column-major index conventions.

Tensors are plain ``numpy.ndarray`` objects with dtype ``complex128``.  All
flattening, unfolding and reshaping in this package uses column-major
(Fortran) order: element ``(i_1, ..., i_N)`` of a tensor with dimensions
``(I_1, ..., I_N)`` sits at flat index ``i_1 + I_1*i_2 + I_1*I_2*i_3 + ...``
(0-based).  Mode arguments in the public API are 1-based, matching the usual
signal-processing convention; they are converted to 0-based axes internally.
"""

from __future__ import annotations

import struct
from functools import reduce
from math import prod

import numpy as np

from .errors import IngestError, InvalidArgumentError

__all__ = [
    "as_tensor",
    "reshape",
    "unfold_cpd",
    "fold_cpd",
    "unfold_mode",
    "mode_product",
    "contract",
    "concat",
    "khatri_rao",
    "kron",
    "outer",
    "write_cten",
    "read_cten",
]


def as_tensor(data) -> np.ndarray:
    """Coerce input to a complex128 ndarray (values are copied if needed)."""
    return np.asarray(data, dtype=np.complex128)


def reshape(t: np.ndarray, new_dims) -> np.ndarray:
    """Column-major reshape: the flat buffer is reinterpreted, never permuted.

    Raises
    ------
    InvalidArgumentError
        If the products of the old and new dimensions differ.
    """
    new_dims = tuple(int(d) for d in new_dims)
    if prod(new_dims) != t.size:
        raise InvalidArgumentError(
            f"cannot reshape size {t.size} tensor into dims {new_dims}"
        )
    return t.reshape(new_dims, order="F")


def unfold_cpd(t: np.ndarray, n: int) -> np.ndarray:
    """Split-style unfolding: rows indexed by modes 1..n, columns by n+1..N.

    Returns the ``prod(I_1..I_n) x prod(I_(n+1)..I_N)`` matrix in which the
    row index runs over (i_1, ..., i_n) column-major and likewise for columns.
    """
    N = t.ndim
    if not 1 <= n < N:
        raise InvalidArgumentError(f"unfold_cpd: n={n} out of range for order {N}")
    rows = prod(t.shape[:n])
    return t.reshape((rows, -1), order="F")


def fold_cpd(m: np.ndarray, n: int, dims) -> np.ndarray:
    """Inverse of :func:`unfold_cpd` for the given target dimensions."""
    dims = tuple(int(d) for d in dims)
    N = len(dims)
    if not 1 <= n < N:
        raise InvalidArgumentError(f"fold_cpd: n={n} out of range for order {N}")
    if m.shape != (prod(dims[:n]), prod(dims[n:])):
        raise InvalidArgumentError(
            f"fold_cpd: matrix shape {m.shape} does not match the <{n}> split "
            f"of dims {dims}"
        )
    return m.reshape(dims, order="F")


def unfold_mode(t: np.ndarray, n: int) -> np.ndarray:
    """Mode-n unfolding ``I_n x (I_(n+1)...I_N I_1...I_(n-1))``.

    Columns follow the cyclic order starting at mode n+1, with the earliest
    listed mode varying fastest (column-major).
    """
    N = t.ndim
    if not 1 <= n <= N:
        raise InvalidArgumentError(f"unfold_mode: n={n} out of range for order {N}")
    axes = [n - 1] + list(range(n, N)) + list(range(0, n - 1))
    return np.transpose(t, axes).reshape((t.shape[n - 1], -1), order="F")


def mode_product(t: np.ndarray, M: np.ndarray, n: int) -> np.ndarray:
    """Mode-n product ``t x_n M``; dimension n becomes the row count of M."""
    N = t.ndim
    if not 1 <= n <= N:
        raise InvalidArgumentError(f"mode_product: n={n} out of range for order {N}")
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[1] != t.shape[n - 1]:
        raise InvalidArgumentError(
            f"mode_product: matrix shape {M.shape} incompatible with mode-{n} "
            f"size {t.shape[n - 1]}"
        )
    out = np.tensordot(t, M, axes=([n - 1], [1]))
    return np.moveaxis(out, -1, n - 1)


def contract(a: np.ndarray, b: np.ndarray, p: int, q: int) -> np.ndarray:
    """Contraction ``a x^q_p b`` over mode p of ``a`` and mode q of ``b``.

    The result has order ``a.ndim + b.ndim - 2`` with the remaining modes of
    ``a`` first, followed by the remaining modes of ``b``.
    """
    if not 1 <= p <= a.ndim or not 1 <= q <= b.ndim:
        raise InvalidArgumentError(f"contract: modes ({p},{q}) out of range")
    if a.shape[p - 1] != b.shape[q - 1]:
        raise InvalidArgumentError(
            f"contract: mode sizes differ ({a.shape[p - 1]} vs {b.shape[q - 1]})"
        )
    return np.tensordot(a, b, axes=([p - 1], [q - 1]))


def concat(ts, mode: int) -> np.ndarray:
    """Stack tensors along the given mode; all other dimensions must agree.

    Tensors of order ``mode - 1`` get a trailing singleton dimension first, so
    stacking N-order blocks along mode N+1 works directly.
    """
    ts = [np.asarray(t) for t in ts]
    if not ts:
        raise InvalidArgumentError("concat: empty tensor list")
    ts = [t[..., np.newaxis] if t.ndim == mode - 1 else t for t in ts]
    for t in ts:
        if t.ndim < mode:
            raise InvalidArgumentError(f"concat: tensor order {t.ndim} < mode {mode}")
    try:
        return np.concatenate(ts, axis=mode - 1)
    except ValueError as exc:
        raise InvalidArgumentError(f"concat: incompatible dims ({exc})") from exc


def khatri_rao(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product; column r is ``kron(A[:, r], B[:, r])``.

    The row index of ``B`` varies fastest, so chains built as
    ``khatri_rao(U_n, khatri_rao(..., U_1))`` put mode 1 innermost, matching
    the column-major unfolding identity for CPD tensors.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise InvalidArgumentError(
            f"khatri_rao: shapes {A.shape} and {B.shape} must be matrices with "
            "equal column counts"
        )
    return (A[:, np.newaxis, :] * B[np.newaxis, :, :]).reshape(
        A.shape[0] * B.shape[0], A.shape[1]
    )


def khatri_rao_list(mats) -> np.ndarray:
    """Khatri-Rao chain with ``mats[0]``'s row index varying fastest."""
    return reduce(lambda acc, m: khatri_rao(m, acc), mats[1:], mats[0])


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kronecker product (thin alias kept for API symmetry)."""
    return np.kron(A, B)


def outer(vs) -> np.ndarray:
    """Rank-1 tensor from a list of vectors: ``v_1 o v_2 o ... o v_N``."""
    vs = [np.asarray(v).ravel() for v in vs]
    if not vs:
        raise InvalidArgumentError("outer: empty vector list")
    return reduce(np.multiply.outer, vs)


# --- CTEN1 binary container -------------------------------------------------
#
# magic "CTEN", version u8 = 1, order u8, order x u32 little-endian dims,
# then interleaved little-endian float64 (re, im) pairs in column-major order.

_CTEN_MAGIC = b"CTEN"


def write_cten(path, t: np.ndarray) -> None:
    """Write a tensor to the CTEN1 binary container."""
    t = as_tensor(t)
    if t.ndim < 1 or t.ndim > 255:
        raise InvalidArgumentError(f"write_cten: unsupported order {t.ndim}")
    with open(path, "wb") as fh:
        fh.write(_CTEN_MAGIC)
        fh.write(struct.pack("<BB", 1, t.ndim))
        fh.write(struct.pack(f"<{t.ndim}I", *t.shape))
        # complex128 memory layout is exactly (re, im) float64 pairs
        fh.write(np.ascontiguousarray(t.ravel(order="F")).astype("<c16").tobytes())


def read_cten(path) -> np.ndarray:
    """Read a tensor from the CTEN1 binary container."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CTEN_MAGIC:
            raise IngestError(f"read_cten: bad magic {magic!r}")
        header = fh.read(2)
        if len(header) != 2:
            raise IngestError("read_cten: truncated header")
        version, order = struct.unpack("<BB", header)
        if version != 1:
            raise IngestError(f"read_cten: unsupported version {version}")
        raw_dims = fh.read(4 * order)
        if len(raw_dims) != 4 * order:
            raise IngestError("read_cten: truncated dims")
        dims = struct.unpack(f"<{order}I", raw_dims)
        count = prod(dims)
        payload = fh.read(16 * count)
        if len(payload) != 16 * count:
            raise IngestError("read_cten: truncated payload")
        flat = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    return flat.reshape(dims, order="F")
