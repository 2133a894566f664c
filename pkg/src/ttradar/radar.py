"""Forward model for the 4D FMCW MIMO virtual-array IF signal tensor.

The clean tensor is a sum of rank-1 terms built from Vandermonde steering
vectors along (virtual azimuth, virtual elevation, fast time, slow time).
Normalized frequency maps (cycles per index step, generator exp(-j2*pi*nu)):

    az_freq      = (d / lambda) * cos(azimuth) * sin(elevation)
    el_freq      = (d / lambda) * sin(azimuth) * sin(elevation)
    range_freq   = 2 * slope * range * T_s / c     (beat frequency * T_s)
    doppler_freq = 2 * velocity * T / lambda       (per-chirp phase step)

The fast-time steering vector starts at exponent 1 instead of 0; the extra
per-target phase is absorbed by the complex amplitude downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import tensor as tz
from .errors import IngestError, InvalidArgumentError, ScenarioError

SPEED_OF_LIGHT = 299_792_458.0

__all__ = [
    "SPEED_OF_LIGHT",
    "RadarConfig",
    "TargetParams",
    "SpatialFrequencies",
    "NoiseSpec",
    "spatial_frequencies",
    "steering_vector",
    "synthesize",
    "add_noise",
    "ingest_adc",
    "export_adc",
    "load_scenario",
    "save_scenario",
    "desk_scenario",
]


@dataclass
class RadarConfig:
    """FMCW MIMO system parameters (SI units)."""

    carrier_hz: float
    chirp_slope_hz_per_s: float
    bandwidth_hz: float
    chirp_duration_s: float
    sample_interval_s: float
    k_ta: int = 1
    k_te: int = 1
    k_ra: int = 1
    k_re: int = 1
    samples_per_chirp: int = 1
    chirps_per_frame: int = 1
    element_spacing_m: float | None = None  # defaults to lambda / 2

    def __post_init__(self):
        if self.element_spacing_m is None:
            self.element_spacing_m = self.wavelength_m / 2.0
        counts = (
            self.k_ta,
            self.k_te,
            self.k_ra,
            self.k_re,
            self.samples_per_chirp,
            self.chirps_per_frame,
        )
        if any(c < 1 for c in counts):
            raise ScenarioError("all element/sample counts must be >= 1")
        swept = self.chirp_slope_hz_per_s * self.chirp_duration_s
        if swept > self.bandwidth_hz * (1 + 1e-9):
            raise ScenarioError(
                f"chirp sweeps {swept:.3e} Hz, exceeding bandwidth "
                f"{self.bandwidth_hz:.3e} Hz"
            )

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def n_azimuth(self) -> int:
        return self.k_ta * self.k_ra

    @property
    def n_elevation(self) -> int:
        return self.k_te * self.k_re

    @property
    def dims(self):
        return (
            self.n_azimuth,
            self.n_elevation,
            self.samples_per_chirp,
            self.chirps_per_frame,
        )


@dataclass
class TargetParams:
    """One point target: range (m), velocity (m/s), angles (rad), amplitude."""

    range_m: float
    velocity_mps: float
    azimuth_rad: float
    elevation_rad: float
    amplitude: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.range_m <= 0:
            raise ScenarioError(f"target range must be positive, got {self.range_m}")


@dataclass
class SpatialFrequencies:
    """Normalized per-index frequencies of one target, each in (-0.5, 0.5)."""

    az_freq: float
    el_freq: float
    range_freq: float
    doppler_freq: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.az_freq, self.el_freq, self.range_freq, self.doppler_freq]
        )


@dataclass
class NoiseSpec:
    """Circular complex Gaussian noise pinned to an input SNR in dB."""

    input_snr_db: float
    seed: int = 0


def spatial_frequencies(
    cfg: RadarConfig, tgt: TargetParams, check: bool = True
) -> SpatialFrequencies:
    """Map physical target parameters to the four normalized frequencies.

    With ``check=True`` (default) any frequency at or beyond the +-0.5
    aliasing boundary raises :class:`ScenarioError` naming the offender.
    """
    lam = cfg.wavelength_m
    d_over_lam = cfg.element_spacing_m / lam
    sin_el = np.sin(tgt.elevation_rad)
    nu = SpatialFrequencies(
        az_freq=d_over_lam * np.cos(tgt.azimuth_rad) * sin_el,
        el_freq=d_over_lam * np.sin(tgt.azimuth_rad) * sin_el,
        range_freq=2.0
        * cfg.chirp_slope_hz_per_s
        * tgt.range_m
        * cfg.sample_interval_s
        / SPEED_OF_LIGHT,
        doppler_freq=2.0 * tgt.velocity_mps * cfg.chirp_duration_s / lam,
    )
    if check:
        names = ("az_freq", "el_freq", "range_freq", "doppler_freq")
        for name, value in zip(names, nu.as_array()):
            if abs(value) >= 0.5:
                raise ScenarioError(
                    f"{name}={value:.4f} aliases (|nu| must be < 0.5) for "
                    f"target at {tgt.range_m} m / {tgt.velocity_mps} m/s"
                )
    return nu


def steering_vector(nu: float, length: int, phase_offset: int = 0) -> np.ndarray:
    """Vandermonde steering vector: entry m is exp(-j*2*pi*nu*(m + offset))."""
    if length < 1:
        raise InvalidArgumentError(f"steering_vector: length {length} < 1")
    return np.exp(-2j * np.pi * nu * (np.arange(length) + phase_offset))


def target_factors(cfg: RadarConfig, tgt: TargetParams, check: bool = True):
    """The four per-mode steering vectors of one target."""
    nu = spatial_frequencies(cfg, tgt, check=check)
    i1, i2, i3, i4 = cfg.dims
    return (
        steering_vector(nu.az_freq, i1),
        steering_vector(nu.el_freq, i2),
        steering_vector(nu.range_freq, i3, phase_offset=1),
        steering_vector(nu.doppler_freq, i4),
    )


def synthesize(cfg: RadarConfig, targets, check: bool = True) -> np.ndarray:
    """Clean IF signal tensor: sum of amplitude-weighted rank-1 terms."""
    if not targets:
        raise ScenarioError("synthesize: at least one target required")
    out = np.zeros(cfg.dims, dtype=np.complex128)
    for tgt in targets:
        vecs = target_factors(cfg, tgt, check=check)
        out += tgt.amplitude * tz.outer(vecs)
    return out


def factor_matrices(cfg: RadarConfig, targets, check: bool = True):
    """Per-mode factor matrices (columns are targets' steering vectors)."""
    cols = [target_factors(cfg, t, check=check) for t in targets]
    return [np.stack([c[n] for c in cols], axis=1) for n in range(4)]


def add_noise(clean: np.ndarray, spec: NoiseSpec):
    """Add seeded circular complex Gaussian noise at the requested SNR.

    The realized ratio ``10*log10(||clean||^2 / ||noise||^2)`` equals
    ``spec.input_snr_db`` exactly (the raw draw is rescaled).  The generator
    is counter-based (Philox), so realizations are reproducible per seed and
    independent of threading.  Returns ``(noisy, noise)``.
    """
    clean = np.asarray(clean, dtype=np.complex128)
    if np.isinf(spec.input_snr_db) and spec.input_snr_db > 0:
        noise = np.zeros_like(clean)
        return clean.copy(), noise
    rng = np.random.Generator(np.random.Philox(spec.seed))
    raw = rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape)
    target_energy = float(np.linalg.norm(clean) ** 2) * 10.0 ** (
        -spec.input_snr_db / 10.0
    )
    raw_energy = float(np.linalg.norm(raw) ** 2)
    noise = raw * np.sqrt(target_energy / raw_energy) if raw_energy > 0 else raw
    return clean + noise, noise


# --- scenario files ----------------------------------------------------------


def load_scenario(path):
    """Read a version-1 scenario JSON: radar config, targets, optional noise."""
    with open(path) as fh:
        doc = json.load(fh)
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict):
    if doc.get("version") != 1:
        raise ScenarioError(f"unsupported scenario version {doc.get('version')!r}")
    cfg = RadarConfig(**doc["radar"])
    targets = []
    for t in doc["targets"]:
        t = dict(t)
        amp = t.pop("amplitude", 1.0)
        if isinstance(amp, (list, tuple)):
            amp = complex(amp[0], amp[1])
        targets.append(TargetParams(amplitude=complex(amp), **t))
    noise = None
    if doc.get("noise") is not None:
        noise = NoiseSpec(**doc["noise"])
    return cfg, targets, noise


def desk_scenario() -> dict:
    """Two coherent-range targets on a 4 x 4 x 64 x 32 virtual array.

    The targets share range (24 m) so plain covariance-based estimation is
    rank deficient without spatial smoothing.  The sampling interval and
    chirp duration are chosen so every normalized frequency is comfortably
    inside (-1/2, 1/2).
    """
    return {
        "version": 1,
        "radar": {
            "carrier_hz": 77e9,
            "chirp_slope_hz_per_s": 85.17e12,
            "bandwidth_hz": 2.51e9,
            "chirp_duration_s": 2e-5,
            "sample_interval_s": 1.0 / 60e6,
            "k_ta": 2,
            "k_te": 2,
            "k_ra": 2,
            "k_re": 2,
            "samples_per_chirp": 64,
            "chirps_per_frame": 32,
        },
        "targets": [
            {
                "range_m": 24.0,
                "velocity_mps": 12.0,
                "azimuth_rad": np.deg2rad(17.5),
                "elevation_rad": np.deg2rad(56.3),
                "amplitude": [1.0, 0.0],
            },
            {
                "range_m": 24.0,
                "velocity_mps": -13.0,
                "azimuth_rad": np.deg2rad(-36.8),
                "elevation_rad": np.deg2rad(36.9),
                "amplitude": [1.0, 0.0],
            },
        ],
        "noise": None,
    }


def save_scenario(path, cfg: RadarConfig, targets, noise: NoiseSpec | None = None):
    doc = {
        "version": 1,
        "radar": {
            "carrier_hz": cfg.carrier_hz,
            "chirp_slope_hz_per_s": cfg.chirp_slope_hz_per_s,
            "bandwidth_hz": cfg.bandwidth_hz,
            "chirp_duration_s": cfg.chirp_duration_s,
            "sample_interval_s": cfg.sample_interval_s,
            "k_ta": cfg.k_ta,
            "k_te": cfg.k_te,
            "k_ra": cfg.k_ra,
            "k_re": cfg.k_re,
            "samples_per_chirp": cfg.samples_per_chirp,
            "chirps_per_frame": cfg.chirps_per_frame,
            "element_spacing_m": cfg.element_spacing_m,
        },
        "targets": [
            {
                "range_m": t.range_m,
                "velocity_mps": t.velocity_mps,
                "azimuth_rad": t.azimuth_rad,
                "elevation_rad": t.elevation_rad,
                "amplitude": [t.amplitude.real, t.amplitude.imag],
            }
            for t in targets
        ],
        "noise": None
        if noise is None
        else {"input_snr_db": noise.input_snr_db, "seed": noise.seed},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


# --- raw ADC capture ----------------------------------------------------------
#
# Raw file layout (per frame, TDM de-multiplexed on ingest):
#   frame -> chirps_per_frame TDM blocks -> n_tx chirp slots
#         -> samples_per_chirp samples -> n_rx receivers -> (I, Q) int16 LE
# Virtual element (tx, rx) occupies azimuth index tx * n_rx + rx; the output
# tensor is (n_tx * n_rx) x 1 x samples_per_chirp x chirps_per_frame.

_SIDECAR_KEYS = (
    "n_tx",
    "n_rx",
    "samples_per_chirp",
    "chirps_per_frame",
    "frame_index",
    "iq_order",
)


def _read_sidecar(sidecar_path) -> dict:
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    missing = [k for k in _SIDECAR_KEYS if k not in meta]
    if missing:
        raise IngestError(f"sidecar missing fields: {missing}")
    if meta["iq_order"] not in ("iq", "qi"):
        raise IngestError(f"unknown iq_order {meta['iq_order']!r}")
    return meta


def ingest_adc(raw_path, sidecar_path) -> np.ndarray:
    """Parse interleaved int16 I/Q ADC samples into a 4D tensor.

    The JSON sidecar declares the capture geometry (see module comment) and
    an optional ``scale`` (counts per unit) applied on read.
    """
    meta = _read_sidecar(sidecar_path)
    n_tx = int(meta["n_tx"])
    n_rx = int(meta["n_rx"])
    n_samp = int(meta["samples_per_chirp"])
    n_chirp = int(meta["chirps_per_frame"])
    frame_index = int(meta["frame_index"])
    scale = float(meta.get("scale", 1.0))

    frame_values = n_chirp * n_tx * n_samp * n_rx  # complex values per frame
    frame_bytes = frame_values * 4  # two int16 per complex value
    offset = frame_index * frame_bytes
    raw = np.fromfile(raw_path, dtype="<i2")
    if raw.size * 2 < offset + frame_bytes:
        raise IngestError(
            f"raw file too short for frame {frame_index}: need "
            f"{offset + frame_bytes} bytes, have {raw.size * 2}",
            byte_offset=raw.size * 2,
        )
    frame = raw[offset // 2 : offset // 2 + frame_values * 2].astype(np.float64)
    if meta["iq_order"] == "iq":
        cplx = frame[0::2] + 1j * frame[1::2]
    else:
        cplx = frame[1::2] + 1j * frame[0::2]
    cplx /= scale
    # index nesting (slowest to fastest): chirp, tx, sample, rx
    block = cplx.reshape(n_chirp, n_tx, n_samp, n_rx)
    out = np.empty((n_tx * n_rx, 1, n_samp, n_chirp), dtype=np.complex128)
    for tx in range(n_tx):
        for rx in range(n_rx):
            out[tx * n_rx + rx, 0, :, :] = block[:, tx, :, rx].T
    return out


def export_adc(raw_path, sidecar_path, t: np.ndarray, iq_order: str = "iq",
               scale: float | None = None) -> None:
    """Quantize a 4D tensor to the int16 raw layout read by :func:`ingest_adc`.

    ``scale`` defaults to using ~90% of the int16 range for the magnitude
    peak; it is recorded in the sidecar so ingest can undo it.
    """
    t = np.asarray(t, dtype=np.complex128)
    if t.ndim != 4 or t.shape[1] != 1:
        raise InvalidArgumentError(
            f"export_adc expects dims (n_virtual, 1, samples, chirps), got {t.shape}"
        )
    if iq_order not in ("iq", "qi"):
        raise InvalidArgumentError(f"unknown iq_order {iq_order!r}")
    n_virtual, _, n_samp, n_chirp = t.shape
    # factor the virtual count as n_tx * n_rx with n_rx as large as possible
    n_rx = n_virtual
    n_tx = 1
    for cand in range(n_virtual, 0, -1):
        if n_virtual % cand == 0:
            n_rx = cand
            n_tx = n_virtual // cand
            break
    peak = float(np.max(np.abs(t.view(np.float64)))) if t.size else 1.0
    if scale is None:
        scale = (0.9 * 32767.0 / peak) if peak > 0 else 1.0
    block = np.empty((n_chirp, n_tx, n_samp, n_rx), dtype=np.complex128)
    for tx in range(n_tx):
        for rx in range(n_rx):
            block[:, tx, :, rx] = t[tx * n_rx + rx, 0, :, :].T
    flat = block.reshape(-1) * scale
    ints = np.empty(flat.size * 2, dtype="<i2")
    re = np.clip(np.round(flat.real), -32768, 32767).astype("<i2")
    im = np.clip(np.round(flat.imag), -32768, 32767).astype("<i2")
    if iq_order == "iq":
        ints[0::2], ints[1::2] = re, im
    else:
        ints[0::2], ints[1::2] = im, re
    ints.tofile(raw_path)
    with open(sidecar_path, "w") as fh:
        json.dump(
            {
                "version": 1,
                "n_tx": n_tx,
                "n_rx": n_rx,
                "samples_per_chirp": n_samp,
                "chirps_per_frame": n_chirp,
                "frame_index": 0,
                "iq_order": iq_order,
                "scale": scale,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
