"""Complex matrix factorizations and the real simultaneous Schur step.

Gauge convention: the first entry of each singular/eigen vector whose
magnitude exceeds 1e-12 of the column maximum is rotated to be real and
positive, so factorizations are stable targets for golden tests.  All
routines are deterministic and RNG-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError, NumericFailureError

__all__ = ["SvdResult", "SsdResult", "svd", "truncated_svd", "qr", "herm_eig", "ssd"]


@dataclass
class SvdResult:
    """Singular triplets ``A ~ U @ diag(sigma) @ V^H`` (V holds columns)."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.conj().T


@dataclass
class SsdResult:
    """Joint quasi-triangularization ``Q.T @ M_k @ Q ~ T_k`` for all k."""

    Q: np.ndarray
    Ts: list
    eigen_tuples: np.ndarray  # shape (R, n_matrices), row r pairs across inputs
    converged: bool
    sweeps: int
    residual: float  # summed squared strictly-lower-triangular mass


def _fix_column_phases(U: np.ndarray, V: np.ndarray | None = None):
    """Rotate each column of U so its first significant entry is real > 0."""
    U = U.copy()
    V = None if V is None else V.copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        mags = np.abs(col)
        top = mags.max()
        if top == 0.0:
            continue
        k = int(np.argmax(mags > 1e-12 * top))
        phase = col[k] / abs(col[k])
        U[:, j] = col / phase
        if V is not None:
            V[:, j] = V[:, j] / phase
    return (U, V) if V is not None else U


def svd(A: np.ndarray) -> SvdResult:
    """Thin SVD with the package phase convention."""
    A = np.asarray(A, dtype=np.complex128)
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError("svd: non-finite entries")
    try:
        U, sigma, Vh = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(f"svd did not converge: {exc}") from exc
    U, V = _fix_column_phases(U, Vh.conj().T)
    return SvdResult(U=U, sigma=sigma, V=V)


def truncated_svd(A: np.ndarray, k: int) -> SvdResult:
    """Leading-k singular triplets of A (Eckart-Young optimal truncation)."""
    A = np.asarray(A)
    if not 1 <= k <= min(A.shape):
        raise InvalidArgumentError(
            f"truncated_svd: k={k} out of range for shape {A.shape}"
        )
    full = svd(A)
    return SvdResult(U=full.U[:, :k], sigma=full.sigma[:k], V=full.V[:, :k])


def qr(A: np.ndarray):
    """Thin QR with the diagonal of R made real and nonnegative."""
    A = np.asarray(A, dtype=np.complex128)
    Q, R = np.linalg.qr(A)
    d = np.diagonal(R).copy()
    phases = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    Q = Q * phases[np.newaxis, :]
    R = phases.conj()[:, np.newaxis] * R
    return Q, R


def herm_eig(A: np.ndarray):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    A = np.asarray(A, dtype=np.complex128)
    nrm = np.linalg.norm(A)
    if nrm > 0 and np.linalg.norm(A - A.conj().T) > 1e-8 * nrm:
        raise InvalidArgumentError("herm_eig: input is not Hermitian")
    vals, vecs = np.linalg.eigh(A)
    idx = np.argsort(vals)[::-1]
    vals = vals[idx]
    vecs = _fix_column_phases(vecs[:, idx])
    return vals, vecs


def _lower_mass(Ms) -> float:
    total = 0.0
    for M in Ms:
        total += float(np.sum(np.tril(M, -1) ** 2))
    return total


def _best_rotation(Ms, p: int, q: int):
    """Angle of the Givens rotation in plane (p, q) minimizing the summed
    strictly-lower-triangular mass over all matrices; evaluated on a dense
    angle grid with a parabolic refinement around the best sample."""
    thetas = np.linspace(-np.pi / 2, np.pi / 2, 121, endpoint=False)

    def objective(theta):
        c, s = np.cos(theta), np.sin(theta)
        total = 0.0
        for M in Ms:
            Mp = M.copy()
            rp, rq = M[p, :].copy(), M[q, :].copy()
            Mp[p, :] = c * rp + s * rq
            Mp[q, :] = -s * rp + c * rq
            cp, cq = Mp[:, p].copy(), Mp[:, q].copy()
            Mp[:, p] = c * cp + s * cq
            Mp[:, q] = -s * cp + c * cq
            total += float(np.sum(np.tril(Mp, -1) ** 2))
        return total

    vals = np.array([objective(th) for th in thetas])
    i = int(np.argmin(vals))
    # golden-section refinement on the bracket around the grid minimum
    lo = thetas[i] - (thetas[1] - thetas[0])
    hi = thetas[i] + (thetas[1] - thetas[0])
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - gr * (b - a)
    x2 = a + gr * (b - a)
    f1, f2 = objective(x1), objective(x2)
    for _ in range(40):
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - gr * (b - a)
            f1 = objective(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + gr * (b - a)
            f2 = objective(x2)
    theta = (a + b) / 2.0
    return theta, objective(theta)


def ssd(Ms, tol: float = 1e-12, max_sweeps: int = 100) -> SsdResult:
    """Simultaneous Schur decomposition of real square matrices.

    One orthogonal Q is built from cyclic-by-rows Jacobi rotations so that
    every ``Q.T @ M_k @ Q`` is as upper-triangular as possible; the summed
    squared strictly-lower-triangular mass never increases.  Diagonals give
    consistently paired eigenvalue tuples (row r holds the r-th tuple).
    """
    Ms = [np.asarray(M, dtype=np.float64).copy() for M in Ms]
    if not Ms:
        raise InvalidArgumentError("ssd: empty matrix list")
    R = Ms[0].shape[0]
    for M in Ms:
        if M.shape != (R, R):
            raise InvalidArgumentError("ssd: matrices must share one square size")

    Q = np.eye(R)
    base = sum(float(np.sum(M**2)) for M in Ms)
    scale = base if base > 0 else 1.0
    if R > 1:
        # Schur basis of a fixed generic combination triangularizes an
        # exactly simultaneously-triangularizable family outright and gives
        # the Jacobi sweeps a basin-of-attraction start otherwise
        weights = np.cos(1.0 + np.arange(len(Ms)))
        _, Q0 = scipy.linalg.schur(
            sum(w * M for w, M in zip(weights, Ms)), output="real"
        )
        Ms = [Q0.T @ M @ Q0 for M in Ms]
        Q = Q0
    mass = _lower_mass(Ms)
    sweeps = 0
    converged = mass <= tol * scale
    while not converged and sweeps < max_sweeps:
        sweeps += 1
        before = mass
        for p in range(R - 1):
            for q in range(p + 1, R):
                theta, new_mass = _best_rotation(Ms, p, q)
                if new_mass < mass - 1e-16 * scale:
                    c, s = np.cos(theta), np.sin(theta)
                    G = np.eye(R)
                    G[p, p] = c
                    G[q, q] = c
                    G[p, q] = -s
                    G[q, p] = s
                    for k in range(len(Ms)):
                        Ms[k] = G.T @ Ms[k] @ G
                    Q = Q @ G
                    mass = new_mass
        if mass <= tol * scale:
            converged = True
        elif before - mass <= 1e-14 * scale:
            # stalled; treat as converged-to-best-effort only if within tol
            break
    tuples = np.stack([np.diagonal(M) for M in Ms], axis=1)
    return SsdResult(
        Q=Q,
        Ts=Ms,
        eigen_tuples=tuples,
        converged=bool(mass <= tol * scale),
        sweeps=sweeps,
        residual=mass,
    )
