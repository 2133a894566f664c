"""Joint range/velocity/azimuth/elevation estimation.

Pipeline: 4-D spatial smoothing -> forward-backward averaging under the
unitary (left-Pi-real) transform -> real-valued multilinear signal subspace
-> per-mode shift-invariance equations -> simultaneous real Schur
decomposition for automatic pairing -> inversion of the normalized spatial
frequencies to physical parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import prod
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import tensor as tz
from .decomp import mdl_rank
from .errors import InvalidArgumentError, NumericFailureError
from .linalg import ssd, svd
from .radar import SPEED_OF_LIGHT, RadarConfig, SpatialFrequencies, TargetParams

__all__ = [
    "SmoothingPlan",
    "EstimationResult",
    "spatial_smooth",
    "unitary_q",
    "fba",
    "signal_subspace",
    "solve_upsilon",
    "joint_eigs",
    "invert_frequencies",
    "estimate",
    "joint_nmse",
]

REALNESS_TOL = 1e-8  # relative imaginary mass allowed after the unitary maps


@dataclass
class SmoothingPlan:
    """Sub-aperture sizes T_n for 4-D spatial smoothing."""

    sub_dims: tuple

    def __post_init__(self):
        self.sub_dims = tuple(int(t) for t in self.sub_dims)
        if len(self.sub_dims) != 4 or any(t < 1 for t in self.sub_dims):
            raise InvalidArgumentError(
                f"sub_dims must be four positive sizes, got {self.sub_dims}"
            )

    def n_blocks(self, dims):
        for t, d in zip(self.sub_dims, dims):
            if t > d:
                raise InvalidArgumentError(
                    f"sub-aperture {t} exceeds tensor dimension {d}"
                )
        return prod(d - t + 1 for t, d in zip(self.sub_dims, dims))


@dataclass
class EstimationResult:
    """Estimated targets plus the diagnostics of the run that produced them."""

    targets: list
    frequencies: list  # SpatialFrequencies per target
    n_targets: int
    ssd_residual: float
    ssd_sweeps: int
    unobservable_modes: tuple = ()
    clipped_elevation: bool = False

    def to_dict(self):
        return {
            "version": 1,
            "n_targets": self.n_targets,
            "targets": [
                {
                    "range_m": t.range_m,
                    "velocity_mps": t.velocity_mps,
                    "azimuth_rad": t.azimuth_rad,
                    "elevation_rad": t.elevation_rad,
                }
                for t in self.targets
            ],
            "frequencies": [list(f.as_array()) for f in self.frequencies],
            "ssd_residual": self.ssd_residual,
            "ssd_sweeps": self.ssd_sweeps,
            "unobservable_modes": list(self.unobservable_modes),
            "clipped_elevation": self.clipped_elevation,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def spatial_smooth(y: np.ndarray, plan: SmoothingPlan) -> np.ndarray:
    """Slide a T_1 x ... x T_4 sub-aperture over the 4-order tensor.

    Returns a 5-order tensor of shape (T_1, ..., T_4, L_1*L_2*L_3*L_4) whose
    last mode enumerates sub-aperture positions with the mode-1 offset
    varying fastest.
    """
    y = np.asarray(y)
    if y.ndim != 4:
        raise InvalidArgumentError(f"spatial_smooth expects order 4, got {y.ndim}")
    n_blocks = plan.n_blocks(y.shape)
    windows = sliding_window_view(y, plan.sub_dims)  # (L1..L4, T1..T4)
    windows = np.transpose(windows, (4, 5, 6, 7, 0, 1, 2, 3))
    return windows.reshape(plan.sub_dims + (n_blocks,), order="F")


def unitary_q(n: int) -> np.ndarray:
    """Left-Pi-real unitary matrix Q_n with flip(Q_n) = conj(Q_n)."""
    if n < 1:
        raise InvalidArgumentError(f"unitary_q: size {n} < 1")
    m = n // 2
    eye = np.eye(m)
    pi = eye[::-1]
    q = np.zeros((n, n), dtype=np.complex128)
    q[:m, :m] = eye
    q[:m, n - m :] = 1j * eye
    q[n - m :, :m] = pi
    q[n - m :, n - m :] = -1j * pi
    if n % 2 == 1:
        q[m, m] = np.sqrt(2.0)
    return q / np.sqrt(2.0)


def fba(y_ss: np.ndarray) -> np.ndarray:
    """Forward-backward averaging in the unitary transform domain.

    The smoothed tensor is augmented along the block mode with its
    conjugate flipped on every mode, transformed by Q^H on the four
    sub-aperture modes, and by Q^T on the doubled block mode.  The block-mode
    transform is applied structurally (never materializing the large Q).
    The result is real; a residual imaginary part above tolerance raises
    :class:`NumericFailureError`.
    """
    y_ss = np.asarray(y_ss, dtype=np.complex128)
    if y_ss.ndim != 5:
        raise InvalidArgumentError(f"fba expects order 5, got {y_ss.ndim}")
    backward = np.conj(y_ss[::-1, ::-1, ::-1, ::-1, ::-1])
    y = np.concatenate([y_ss, backward], axis=4)
    for n in range(4):
        q = unitary_q(y.shape[n])
        y = tz.mode_product(y, q.conj().T, n + 1)
    # mode-5 product with Q_{2J}^T: with x1/x2 the two halves along the block
    # mode, rows of Q^T give (x1 + flip(x2))/sqrt(2) and j(x1 - flip(x2))/sqrt(2)
    j5 = y_ss.shape[4]
    x1 = y[..., :j5]
    x2 = y[..., j5:][..., ::-1]
    out = np.concatenate(
        [(x1 + x2) / np.sqrt(2.0), 1j * (x1 - x2) / np.sqrt(2.0)], axis=4
    )
    total = np.linalg.norm(out)
    imag = np.linalg.norm(out.imag)
    if total > 0 and imag > REALNESS_TOL * total:
        raise NumericFailureError(
            f"forward-backward average retained imaginary mass "
            f"{imag / total:.3e} of the total"
        )
    return out.real


def signal_subspace(y_fb: np.ndarray, n_targets: int) -> np.ndarray:
    """Multilinear signal-subspace tensor of shape (J_1..J_4, n_targets).

    Each sub-aperture mode is projected onto its min(J_n, n_targets)
    dominant left singular vectors; the block mode is compressed to the
    n_targets dominant ones.  The combined unfolding of the result spans
    the (estimated) signal subspace.
    """
    y_fb = np.asarray(y_fb, dtype=np.float64)
    dims = y_fb.shape
    space = prod(dims[:4])
    if not 1 <= n_targets <= min(space, dims[4]):
        raise InvalidArgumentError(
            f"n_targets {n_targets} not supported by smoothed dims {dims}"
        )
    g = y_fb
    for n in range(4):
        k = min(dims[n], n_targets)
        if k == dims[n]:
            continue
        res = svd(tz.unfold_mode(y_fb, n + 1))
        u = res.U[:, :k].real
        g = tz.mode_product(g, u @ u.T, n + 1)
    res = svd(tz.unfold_mode(y_fb, 5))
    u5 = res.U[:, :n_targets].real
    return tz.mode_product(g, u5.T, 5)


def solve_upsilon(subspace: np.ndarray):
    """Per-mode shift-invariance solutions.

    For each sub-aperture mode n the selection matrices pick the leading and
    trailing J_n - 1 rows; in the unitary domain the invariance reads
    ``K2 @ E = K1 @ E @ Upsilon_n`` with K1, K2 the real and imaginary parts
    of Q_(J-1)^H S_1 Q_J and eigenvalues tan(pi nu).  Modes of length 1
    carry no invariance and are reported as unobservable (zero matrix).

    Returns ``(upsilons, unobservable)``.
    """
    g = np.asarray(subspace, dtype=np.float64)
    if g.ndim != 5:
        raise InvalidArgumentError(f"solve_upsilon expects order 5, got {g.ndim}")
    r = g.shape[4]
    upsilons = []
    unobservable = []
    for n in range(4):
        jn = g.shape[n]
        if jn < 2:
            upsilons.append(np.zeros((r, r)))
            unobservable.append(n + 1)
            continue
        s1 = np.eye(jn - 1, jn, k=0)
        g1 = unitary_q(jn - 1).conj().T @ s1 @ unitary_q(jn)
        k1, k2 = g1.real, g1.imag
        m1 = tz.unfold_cpd(tz.mode_product(g, k1, n + 1), 4)
        m2 = tz.unfold_cpd(tz.mode_product(g, k2, n + 1), 4)
        ups, _, rank, _ = np.linalg.lstsq(m1, m2, rcond=None)
        if rank < r:
            raise NumericFailureError(
                f"shift-invariance system for mode {n + 1} is rank deficient "
                f"({rank} < {r}); increase the sub-aperture or reduce targets"
            )
        upsilons.append(ups)
    return upsilons, tuple(unobservable)


def joint_eigs(upsilons, unobservable=()):
    """Simultaneously (approximately) Schur-decompose the four Upsilon
    matrices and return the paired eigenvalue tuples plus SSD diagnostics."""
    active = [u for n, u in enumerate(upsilons) if (n + 1) not in unobservable]
    if not active:
        raise InvalidArgumentError("joint_eigs: every mode is unobservable")
    res = ssd(active)
    r = upsilons[0].shape[0]
    tuples = np.zeros((r, 4))
    k = 0
    for n in range(4):
        if (n + 1) in unobservable:
            continue
        tuples[:, n] = res.eigen_tuples[:, k]
        k += 1
    return tuples, res


def invert_frequencies(cfg: RadarConfig, nu: np.ndarray):
    """Physical parameters from one tuple of normalized spatial frequencies.

    Returns ``(TargetParams, clipped)`` where ``clipped`` flags an elevation
    magnitude that had to be clipped into the arcsin domain.
    """
    nu = np.asarray(nu, dtype=np.float64)
    ratio = cfg.element_spacing_m / cfg.wavelength_m
    rng = (
        nu[2]
        * SPEED_OF_LIGHT
        / (2.0 * cfg.chirp_slope_hz_per_s * cfg.sample_interval_s)
    )
    vel = nu[3] * cfg.wavelength_m / (2.0 * cfg.chirp_duration_s)
    planar = np.hypot(nu[0], nu[1]) / ratio
    clipped = bool(planar > 1.0)
    if np.hypot(nu[0], nu[1]) < 1e-12:
        az = 0.0
    else:
        az = float(np.arctan2(nu[1], nu[0]))
    el = float(np.arcsin(min(planar, 1.0)))
    target = TargetParams(
        range_m=max(float(rng), np.finfo(float).tiny),
        velocity_mps=float(vel),
        azimuth_rad=az,
        elevation_rad=el,
    )
    return target, clipped


def estimate(
    y: np.ndarray,
    cfg: RadarConfig,
    plan: SmoothingPlan,
    n_targets: int = None,
    y_fb: np.ndarray = None,
) -> EstimationResult:
    """Full estimation pipeline on a (possibly denoised) 4-order tensor.

    When ``n_targets`` is omitted it is chosen by MDL on the block-mode
    unfolding of the forward-backward averaged tensor.  A precomputed
    smoothed-and-averaged tensor may be passed as ``y_fb`` to skip the
    first two stages.
    """
    if y_fb is None:
        y_fb = fba(spatial_smooth(y, plan))
    if n_targets is None:
        n_targets, _ = mdl_rank(tz.unfold_cpd(y_fb, 4))
        if n_targets < 1:
            raise NumericFailureError("no targets detected by MDL")
    subspace = signal_subspace(y_fb, n_targets)
    upsilons, unobservable = solve_upsilon(subspace)
    tuples, res = joint_eigs(upsilons, unobservable)
    nus = np.arctan(tuples) / np.pi
    targets = []
    freqs = []
    clipped_any = False
    for row in nus:
        target, clipped = invert_frequencies(cfg, row)
        clipped_any = clipped_any or clipped
        targets.append(target)
        freqs.append(
            SpatialFrequencies(
                az_freq=float(row[0]),
                el_freq=float(row[1]),
                range_freq=float(row[2]),
                doppler_freq=float(row[3]),
            )
        )
    return EstimationResult(
        targets=targets,
        frequencies=freqs,
        n_targets=n_targets,
        ssd_residual=res.residual,
        ssd_sweeps=res.sweeps,
        unobservable_modes=unobservable,
        clipped_elevation=clipped_any,
    )


def _relative_sq(est, true):
    denom = abs(true) if true != 0 else 1.0
    return ((est - true) / denom) ** 2


def joint_nmse(estimated, true) -> float:
    """Mean per-target sum of squared relative parameter errors.

    Estimated and true target lists are matched by minimum-cost assignment;
    unmatched targets (count mismatch) each contribute a penalty equal to
    the worst matched cost or 4.0, whichever is larger.
    """
    if not true:
        raise InvalidArgumentError("joint_nmse: no reference targets")
    if not estimated:
        return 4.0
    from scipy.optimize import linear_sum_assignment

    cost = np.zeros((len(estimated), len(true)))
    for i, e in enumerate(estimated):
        for k, t in enumerate(true):
            cost[i, k] = (
                _relative_sq(e.range_m, t.range_m)
                + _relative_sq(e.velocity_mps, t.velocity_mps)
                + _relative_sq(e.azimuth_rad, t.azimuth_rad)
                + _relative_sq(e.elevation_rad, t.elevation_rad)
            )
    rows, cols = linear_sum_assignment(cost)
    matched = cost[rows, cols]
    penalty = max(4.0, matched.max() if matched.size else 4.0)
    n_extra = len(true) - len(matched)
    return float((matched.sum() + n_extra * penalty) / len(true))
