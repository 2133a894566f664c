"""Signal-quality metrics and quick-look spectral profiles."""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError

__all__ = ["output_snr_db", "rd_profile", "ra_profile"]

SNR_CAP_DB = 300.0  # sentinel for an exact (zero-error) reconstruction
PROFILE_FLOOR_DB = -120.0


def output_snr_db(clean: np.ndarray, processed: np.ndarray) -> float:
    """10 log10(||clean||^2 / ||processed - clean||^2), capped at 300 dB."""
    clean = np.asarray(clean)
    processed = np.asarray(processed)
    if clean.shape != processed.shape:
        raise InvalidArgumentError(
            f"shape mismatch {clean.shape} vs {processed.shape}"
        )
    signal = float(np.linalg.norm(clean) ** 2)
    if signal == 0.0:
        raise InvalidArgumentError("output_snr_db: reference tensor is zero")
    err = float(np.linalg.norm(processed - clean) ** 2)
    if err == 0.0:
        return SNR_CAP_DB
    return min(10.0 * np.log10(signal / err), SNR_CAP_DB)


def _profile(y: np.ndarray, axes_keep, n_fft: int = 256) -> np.ndarray:
    mag = np.abs(np.fft.fftn(y, s=(n_fft, n_fft), axes=axes_keep))
    reduce_axes = tuple(a for a in range(y.ndim) if a not in axes_keep)
    power = np.sqrt(np.sum(mag**2, axis=reduce_axes))
    peak = power.max()
    if peak == 0.0:
        return np.full(power.shape, PROFILE_FLOOR_DB)
    db = 20.0 * np.log10(np.maximum(power / peak, 10.0 ** (PROFILE_FLOOR_DB / 20)))
    return db


def rd_profile(y: np.ndarray, n_fft: int = 256) -> np.ndarray:
    """Range-Doppler map in dB (max-normalized, floored at -120 dB).

    Zero-padded FFTs over the fast-time and slow-time modes; remaining
    modes are combined incoherently.
    """
    y = np.asarray(y)
    if y.ndim != 4:
        raise InvalidArgumentError(f"rd_profile expects order 4, got {y.ndim}")
    return _profile(y, (2, 3), n_fft)


def ra_profile(y: np.ndarray, n_fft: int = 256) -> np.ndarray:
    """Range-azimuth map in dB (max-normalized, floored at -120 dB)."""
    y = np.asarray(y)
    if y.ndim != 4:
        raise InvalidArgumentError(f"ra_profile expects order 4, got {y.ndim}")
    out = _profile(y, (2, 0), n_fft)
    return out
