"""Low-rank tensor models: TT-SVD denoising with MDL rank selection,
CPD via alternating least squares, the CPD-to-TT construction, and
bond-local TT recompression."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from math import prod
from pathlib import Path

import numpy as np

from . import tensor as tz
from .errors import InvalidArgumentError
from .linalg import herm_eig, qr, svd

__all__ = [
    "TTModel",
    "CpdModel",
    "MdlDiagnostics",
    "TtMdlResult",
    "mdl_rank",
    "tt_mdl",
    "cpd_als",
    "cpd_to_tt",
    "tt_recompress",
    "reconstruct",
    "save_model",
    "load_model",
]

EIGENVALUE_FLOOR = 1e-15  # relative to the largest eigenvalue, applied pre-log


@dataclass
class TTModel:
    """Tensor-train: cores[n] has shape (T_n, I_(n+1), T_(n+1)), T_0 = T_N = 1."""

    cores: list

    def __post_init__(self):
        for a, b in zip(self.cores[:-1], self.cores[1:]):
            if a.shape[2] != b.shape[0]:
                raise InvalidArgumentError(
                    f"adjacent TT ranks disagree: {a.shape} -> {b.shape}"
                )
        if self.cores[0].shape[0] != 1 or self.cores[-1].shape[2] != 1:
            raise InvalidArgumentError("boundary TT ranks must be 1")

    @property
    def ranks(self):
        return [1] + [c.shape[2] for c in self.cores]

    @property
    def dims(self):
        return tuple(c.shape[1] for c in self.cores)


@dataclass
class CpdModel:
    """CP model: unit-norm factor columns, weights carry magnitude/phase."""

    weights: np.ndarray  # (R,)
    factors: list  # U_n of shape (I_n, R)

    def __post_init__(self):
        R = len(self.weights)
        for U in self.factors:
            if U.ndim != 2 or U.shape[1] != R:
                raise InvalidArgumentError(
                    f"factor shape {U.shape} inconsistent with R={R}"
                )

    @property
    def rank(self):
        return len(self.weights)

    @property
    def dims(self):
        return tuple(U.shape[0] for U in self.factors)


@dataclass
class MdlDiagnostics:
    """Eigenvalue spectrum and description-length curve behind one rank pick."""

    eigenvalues: np.ndarray
    curve: np.ndarray
    rank: int
    degenerate: bool = False


@dataclass
class TtMdlResult:
    """Output of :func:`tt_mdl`: the TT model, its reconstruction, and the
    per-sweep diagnostics needed for energy bookkeeping."""

    model: TTModel
    denoised: np.ndarray
    diagnostics: list = field(default_factory=list)
    truncation_energies: list = field(default_factory=list)  # ||E_n||_F^2 per sweep
    empty_signal: bool = False


def mdl_rank(C: np.ndarray, printed_exponent: bool = False):
    """Number of dominant eigenvalues of the column covariance of C.

    The matrix is centered by subtracting the mean column, the covariance
    ``Delta = Cbar @ Cbar^H / n_cols`` is eigendecomposed, and the
    description length is minimized over candidate ranks 0..M-1 using the
    classical geometric/arithmetic mean ratio of the trailing eigenvalues.
    ``printed_exponent=True`` switches to a variant that weights each
    eigenvalue by 1/M in the geometric mean (kept for comparison only; it
    loses MDL's consistency property).

    Returns ``(rank, MdlDiagnostics)``.
    """
    C = np.asarray(C)
    if C.ndim != 2 or C.shape[1] < 2:
        raise InvalidArgumentError("mdl_rank: need a matrix with >= 2 columns")
    M, n_cols = C.shape
    if not np.any(C):
        diag = MdlDiagnostics(
            eigenvalues=np.zeros(M), curve=np.zeros(M), rank=0, degenerate=True
        )
        return 0, diag
    centered = C - C.mean(axis=1, keepdims=True)
    delta = centered @ centered.conj().T / n_cols
    delta = (delta + delta.conj().T) / 2.0
    eigvals, _ = herm_eig(delta)
    eigvals = np.maximum(eigvals.real, EIGENVALUE_FLOOR * max(eigvals[0].real, 0.0))
    if eigvals[0] <= 0:
        diag = MdlDiagnostics(
            eigenvalues=eigvals, curve=np.zeros(M), rank=0, degenerate=True
        )
        return 0, diag
    logs = np.log(eigvals)
    curve = np.empty(M)
    for t in range(M):
        tail = M - t
        mean_log = logs[t:].mean()
        log_arith = np.log(eigvals[t:].mean())
        if printed_exponent:
            # geometric mean exponent 1/M as printed, instead of 1/(M-t)
            ratio = (tail / M) * mean_log - log_arith
        else:
            ratio = mean_log - log_arith
        curve[t] = -n_cols * tail * ratio + 0.5 * t * (2 * M - t) * np.log(n_cols)
    rank = int(np.argmin(curve))
    return rank, MdlDiagnostics(eigenvalues=eigvals, curve=curve, rank=rank)


def tt_mdl(y: np.ndarray, printed_exponent: bool = False) -> TtMdlResult:
    """TT-SVD denoising with per-sweep MDL rank selection.

    Sweeps the modes left to right; each sweep picks the rank by MDL on the
    centered iterate, truncates the SVD there, and reshapes the residual
    factor into the next iterate.  A rank-0 decision on the first mode means
    no detectable signal and yields a zero tensor (flagged); later rank-0
    decisions are clamped to 1 so the chain stays intact.
    """
    y = np.asarray(y, dtype=np.complex128)
    N = y.ndim
    if N < 3:
        raise InvalidArgumentError(f"tt_mdl expects order >= 3, got {N}")
    dims = y.shape
    C = tz.unfold_cpd(y, 1)
    cores = []
    diagnostics = []
    energies = []
    prev_rank = 1
    for n in range(1, N):
        # orient so channels <= snapshots: a tall iterate has a rank-deficient
        # sample covariance whose zero tail defeats the MDL tail statistic
        stat = C if C.shape[0] <= C.shape[1] else C.conj().T
        rank, diag = mdl_rank(stat, printed_exponent=printed_exponent)
        diagnostics.append(diag)
        if rank == 0:
            if n == 1:
                warnings.warn(
                    "tt_mdl: MDL found no signal on the first mode; "
                    "returning a zero tensor",
                    stacklevel=2,
                )
                zero_cores = []
                r = 1
                for d in dims:
                    zero_cores.append(np.zeros((r, d, 1), dtype=np.complex128))
                    r = 1
                model = TTModel(cores=zero_cores)
                return TtMdlResult(
                    model=model,
                    denoised=np.zeros(dims, dtype=np.complex128),
                    diagnostics=diagnostics,
                    truncation_energies=[float(np.linalg.norm(y) ** 2)],
                    empty_signal=True,
                )
            warnings.warn(
                f"tt_mdl: MDL returned 0 on sweep {n}; clamping rank to 1",
                stacklevel=2,
            )
            rank = 1
        rank = min(rank, *C.shape)
        res = svd(C)
        energies.append(float(np.sum(res.sigma[rank:] ** 2)))
        U = res.U[:, :rank]
        cores.append(U.reshape((prev_rank, dims[n - 1], rank), order="F"))
        C0 = res.sigma[:rank, None] * res.V[:, :rank].conj().T
        tail = prod(dims[n + 1 :]) if n + 1 < N else 1
        C = C0.reshape((rank * dims[n], tail), order="F")
        prev_rank = rank
    cores.append(C.reshape((prev_rank, dims[-1], 1), order="F"))
    model = TTModel(cores=cores)
    return TtMdlResult(
        model=model,
        denoised=reconstruct(model),
        diagnostics=diagnostics,
        truncation_energies=energies,
    )


def reconstruct(model) -> np.ndarray:
    """Dense tensor from a TT or CP model."""
    if isinstance(model, TTModel):
        left = model.cores[0][0]  # (I_1, T_1)
        dims = [left.shape[0]]
        for core in model.cores[1:]:
            t, i, t2 = core.shape
            left = left.reshape((-1, t), order="F") @ core.reshape(
                (t, i * t2), order="F"
            )
            # now (prod(dims) x (I*T2)) with I varying fastest in the columns
            dims.append(i)
            left = left.reshape((prod(dims), t2), order="F")
        return left.reshape(tuple(dims), order="F")
    if isinstance(model, CpdModel):
        U1 = model.factors[0] * model.weights[np.newaxis, :]
        rest = tz.khatri_rao_list(model.factors[1:])
        return tz.fold_cpd(U1 @ rest.T, 1, model.dims)
    raise InvalidArgumentError(f"reconstruct: unsupported model {type(model)!r}")


def _normalize_cpd(weights, factors):
    weights = np.asarray(weights, dtype=np.complex128).copy()
    out = []
    for U in factors:
        norms = np.linalg.norm(U, axis=0)
        norms = np.where(norms > 0, norms, 1.0)
        out.append(U / norms)
        weights = weights * norms
    return weights, out


def cpd_als(
    y: np.ndarray,
    R: int,
    max_iters: int = 100,
    tol: float = 1e-8,
    seed: int = 0,
    n_restarts: int = 5,
) -> CpdModel:
    """Rank-R CP decomposition by alternating least squares.

    Runs ``n_restarts`` seeded random orthonormal initializations and keeps
    the best fit.  Rank-deficient normal equations are stabilized by a ridge
    of 1e-10 times their trace (flagged on the model as ``regularized``).
    """
    y = np.asarray(y, dtype=np.complex128)
    if R < 1:
        raise InvalidArgumentError(f"cpd_als: rank {R} < 1")
    N = y.ndim
    dims = y.shape
    y_norm = float(np.linalg.norm(y))
    # mode-n matricization with the remaining modes in original order,
    # earliest remaining mode varying fastest along columns
    mats = [
        np.moveaxis(y, n, 0).reshape((dims[n], -1), order="F") for n in range(N)
    ]

    best = None
    for restart in range(n_restarts):
        rng = np.random.Generator(np.random.Philox(seed + restart))
        factors = []
        for d in dims:
            raw = rng.standard_normal((d, R)) + 1j * rng.standard_normal((d, R))
            Q, _ = qr(raw) if d >= R else (raw, None)
            factors.append(Q[:, :R] if d >= R else raw)
        weights = np.ones(R, dtype=np.complex128)
        prev_resid = np.inf
        regularized = False
        resid = np.inf
        for _ in range(max_iters):
            for n in range(N):
                others = [factors[m] for m in range(N) if m != n]
                K = tz.khatri_rao_list(others)
                G = K.conj().T @ K  # Gram of the Khatri-Rao design
                rhs = mats[n] @ K.conj()
                gram = G.conj()  # K^T K* = (K^H K)*
                if np.linalg.cond(gram) > 1e12:
                    gram = gram + 1e-10 * np.trace(gram).real * np.eye(R)
                    regularized = True
                factors[n] = np.linalg.solve(gram.T, rhs.T).T
            weights, factors = _normalize_cpd(np.ones(R), factors)
            model = CpdModel(weights=weights, factors=[f.copy() for f in factors])
            resid = float(np.linalg.norm(reconstruct(model) - y))
            if prev_resid - resid < tol * max(y_norm, 1e-30):
                prev_resid = resid
                break
            prev_resid = resid
        model = CpdModel(weights=weights, factors=factors)
        model.regularized = regularized
        model.residual = resid
        if best is None or resid < best.residual:
            best = model
    return best


def cpd_to_tt(m: CpdModel) -> TTModel:
    """Exact TT form of a CP model with ranks min(R^n, R^(N-n)).

    The identity tensor (and, at the pivot core, the diagonal weight tensor)
    is reshaped column-major into a 3-order carrier and hit with the mode-2
    product by the corresponding factor matrix.
    """
    N = len(m.factors)
    R = m.rank
    dims = m.dims
    if N < 2:
        raise InvalidArgumentError("cpd_to_tt: need order >= 2")
    if N == 2:
        head = (m.factors[0] * m.weights[np.newaxis, :])[np.newaxis, :, :]
        tail = m.factors[1].T[:, :, np.newaxis]
        return TTModel(cores=[head, tail])
    pivot = -(-N // 2)  # smallest n with R^n >= R^(N-n)
    cores = [m.factors[0][np.newaxis, :, :]]
    for n in range(2, N):
        if n == pivot:
            diag = np.zeros((R,) * N, dtype=np.complex128)
            diag[(np.arange(R),) * N] = m.weights
            carrier = diag.reshape((R ** (n - 1), R, R ** (N - n)), order="F")
        elif n < pivot:
            carrier = np.eye(R**n, dtype=np.complex128).reshape(
                (R ** (n - 1), R, R**n), order="F"
            )
        else:
            carrier = np.eye(R ** (N - n + 1), dtype=np.complex128).reshape(
                (R ** (N - n + 1), R, R ** (N - n)), order="F"
            )
        cores.append(tz.mode_product(carrier, m.factors[n - 1], 2))
    cores.append(m.factors[N - 1].T[:, :, np.newaxis])
    return TTModel(cores=cores)


def tt_recompress(model: TTModel, epsilon: float) -> TTModel:
    """Reduce TT bond ranks to a relative accuracy epsilon per bond.

    Left-orthogonalizes with QR sweeping right, then truncates with SVDs
    sweeping left; each bond keeps the smallest rank whose discarded
    singular tail satisfies ``||tail|| <= epsilon * ||sigma||``.  The global
    reconstruction error is bounded by ``epsilon * sqrt(N-1)`` relative.
    """
    if not 0 <= epsilon < 1:
        raise InvalidArgumentError(f"tt_recompress: epsilon {epsilon} not in [0, 1)")
    cores = [c.copy() for c in model.cores]
    N = len(cores)
    # left-orthogonalization pass
    for n in range(N - 1):
        t, i, t2 = cores[n].shape
        Q, Rf = qr(cores[n].reshape((t * i, t2), order="F"))
        k = Q.shape[1]
        cores[n] = Q.reshape((t, i, k), order="F")
        nxt = cores[n + 1]
        cores[n + 1] = np.tensordot(Rf, nxt, axes=([1], [0]))
    # right-to-left truncation pass
    for n in range(N - 1, 0, -1):
        t, i, t2 = cores[n].shape
        res = svd(cores[n].reshape((t, i * t2), order="F"))
        total = float(np.sum(res.sigma**2))
        if total == 0.0:
            k = 1
        else:
            tail = np.concatenate([np.cumsum(res.sigma[::-1] ** 2)[::-1][1:], [0.0]])
            ok = tail <= (epsilon**2) * total
            k = int(np.argmax(ok)) + 1
        U = res.U[:, :k] * res.sigma[:k][np.newaxis, :]
        cores[n] = res.V[:, :k].conj().T.reshape((k, i, t2), order="F")
        prev = cores[n - 1]
        cores[n - 1] = np.tensordot(prev, U, axes=([2], [0]))
    return TTModel(cores=cores)


# --- model containers ---------------------------------------------------------


def save_model(dirpath, model) -> None:
    """Write a TT or CP model as CTEN1 tensors plus a JSON manifest."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    if isinstance(model, TTModel):
        manifest = {
            "format": "ttm1",
            "version": 1,
            "ranks": model.ranks,
            "dims": list(model.dims),
            "cores": [f"core_{n:03d}.cten" for n in range(len(model.cores))],
        }
        for name, core in zip(manifest["cores"], model.cores):
            tz.write_cten(dirpath / name, core)
    elif isinstance(model, CpdModel):
        manifest = {
            "format": "cpd1",
            "version": 1,
            "R": model.rank,
            "dims": list(model.dims),
            "factors": [f"factor_{n:03d}.cten" for n in range(len(model.factors))],
            "weights": "weights.cten",
        }
        for name, U in zip(manifest["factors"], model.factors):
            tz.write_cten(dirpath / name, U)
        tz.write_cten(dirpath / "weights.cten", model.weights)
    else:
        raise InvalidArgumentError(f"save_model: unsupported model {type(model)!r}")
    with open(dirpath / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load_model(dirpath):
    dirpath = Path(dirpath)
    with open(dirpath / "manifest.json") as fh:
        manifest = json.load(fh)
    if manifest["format"] == "ttm1":
        cores = [tz.read_cten(dirpath / name) for name in manifest["cores"]]
        return TTModel(cores=cores)
    if manifest["format"] == "cpd1":
        factors = [tz.read_cten(dirpath / name) for name in manifest["factors"]]
        weights = tz.read_cten(dirpath / manifest["weights"])
        return CpdModel(weights=weights, factors=factors)
    raise InvalidArgumentError(f"load_model: unknown format {manifest['format']!r}")
