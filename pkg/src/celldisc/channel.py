"""Multipath mm-wave channels and their angular (2D-DFT) representation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, InfeasibleSupportError, InvalidDimensionError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class PathComponent:
    gain: complex
    aoa: float
    aod: float
    variance: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.gain):
            raise ValueError("path gain must be finite")
        if self.variance < 0:
            raise ValueError("path variance must be non-negative")


@dataclass(frozen=True)
class MultipathChannel:
    paths: tuple
    n_r: int
    n_t: int
    d_over_lambda: float = 0.5

    def __post_init__(self):
        if self.n_r < 1 or self.n_t < 1:
            raise InvalidDimensionError("array sizes must be positive")
        object.__setattr__(self, "paths", tuple(self.paths))

    @property
    def n_paths(self):
        return len(self.paths)

    def matrix(self) -> np.ndarray:
        return synthesize_channel(self)

    @classmethod
    def zero(cls, n_r, n_t, d_over_lambda=0.5):
        return cls((), n_r, n_t, d_over_lambda)


@dataclass(frozen=True)
class AngularChannel:
    g: np.ndarray
    support: frozenset = field(default_factory=frozenset)
    delta: float = 0.0

    def support_mask(self):
        mask = np.zeros(self.g.shape, dtype=bool)
        for a, b in self.support:
            mask[a, b] = True
        return mask


def spatial_frequency(theta, d_over_lambda=0.5):
    return 2 * np.pi * d_over_lambda * np.sin(theta)


def array_response(omega: float, n: int) -> np.ndarray:
    """ULA steering vector ``exp(-j m omega) / sqrt(n)``, m = 0..n-1."""
    if n < 1:
        raise InvalidDimensionError(f"antenna count must be >= 1, got {n}")
    return np.exp(-1j * omega * np.arange(n)) / np.sqrt(n)


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix; column l equals ``array_response(2 pi l / n, n)``."""
    if n < 1:
        raise InvalidDimensionError(f"DFT size must be >= 1, got {n}")
    m = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(m, m) / n) / np.sqrt(n)


def synthesize_channel(ch: MultipathChannel) -> np.ndarray:
    H = np.zeros((ch.n_r, ch.n_t), dtype=complex)
    for path in ch.paths:
        if not (np.isfinite(path.aoa) and np.isfinite(path.aod)):
            raise ValueError("path angles must be finite")
        a_r = array_response(spatial_frequency(path.aoa, ch.d_over_lambda), ch.n_r)
        a_t = array_response(spatial_frequency(path.aod, ch.d_over_lambda), ch.n_t)
        H += path.gain * np.outer(a_r, a_t.conj())
    return H


def half_max_threshold(g: np.ndarray) -> float:
    """Support threshold used for simulated channels: half the peak bin power."""
    return 0.5 * float(np.max(np.abs(g) ** 2)) if g.size else 0.0


def angular_transform(H: np.ndarray, delta: float | None = None) -> AngularChannel:
    """``G = F_r^* H F_t`` and the bins whose power exceeds ``delta``.

    With ``delta=None`` the half-peak rule of :func:`half_max_threshold` is used.
    """
    H = np.asarray(H)
    n_r, n_t = H.shape
    g = dft_matrix(n_r).conj().T @ H @ dft_matrix(n_t)
    if delta is None:
        delta = half_max_threshold(g)
    rows, cols = np.nonzero(np.abs(g) ** 2 > delta)
    return AngularChannel(g, frozenset(zip(rows.tolist(), cols.tolist())), float(delta))


def bin_angle(index: int, n: int, d_over_lambda=0.5) -> float:
    """Physical angle in [-pi/2, pi/2) whose spatial frequency hits DFT bin ``index``."""
    omega = 2 * np.pi * index / n
    omega = (omega + np.pi) % (2 * np.pi) - np.pi  # wrap to [-pi, pi)
    s = omega / (2 * np.pi * d_over_lambda)
    if not -1 <= s < 1 + 1e-12:
        raise InvalidDimensionError(
            f"bin {index} of {n} is not reachable with d/lambda={d_over_lambda}")
    return float(np.arcsin(np.clip(s, -1.0, 1.0)))


def circular_normal(rng, size=None, variance=1.0):
    scale = np.sqrt(np.asarray(variance) / 2)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def channel_from_bins(bins, gains, n_r, n_t, variances=None, d_over_lambda=0.5):
    """On-grid channel with one path per (receive-bin, transmit-bin) pair."""
    if variances is None:
        variances = np.abs(gains) ** 2
    paths = [
        PathComponent(complex(g), bin_angle(a, n_r, d_over_lambda), bin_angle(b, n_t, d_over_lambda), float(v))
        for (a, b), g, v in zip(bins, gains, variances)
    ]
    return MultipathChannel(tuple(paths), n_r, n_t, d_over_lambda)


def draw_bins(k, n_r, n_t, rng, exclude=()):
    """k distinct (a, b) bins uniformly at random, avoiding ``exclude``."""
    excluded = {a * n_t + b for a, b in exclude}
    free = n_r * n_t - len(excluded)
    if k > free:
        raise InfeasibleSupportError(f"cannot place {k} distinct paths in {free} free bins")
    if excluded:
        pool = np.setdiff1d(np.arange(n_r * n_t), np.fromiter(excluded, int))
        flat = rng.choice(pool, size=k, replace=False)
    else:
        flat = rng.choice(n_r * n_t, size=k, replace=False)
    return [(int(f) // n_t, int(f) % n_t) for f in flat]


def sample_ideal_channel(k, variances, n_r, n_t, rng, *, d_over_lambda=0.5, exclude=()):
    """Ideal channel: k paths on distinct DFT bins with CN(0, variance) gains."""
    variances = np.asarray(variances, dtype=float).reshape(-1)
    if len(variances) != k:
        raise ValueError(f"need {k} variances, got {len(variances)}")
    if k > n_r * n_t:
        raise InfeasibleSupportError(f"k={k} paths do not fit in {n_r}x{n_t} bins")
    bins = draw_bins(k, n_r, n_t, rng, exclude)
    gains = circular_normal(rng, k, variances)
    return channel_from_bins(bins, gains, n_r, n_t, variances, d_over_lambda)


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss anchored at free space 1 m.

    ``PL(d) = FSPL(1 m, f_c) + 10 n log10(d)`` with separate LOS / NLOS
    exponents.  Total mean power is split across the K paths by an
    exponential (dB-linear) decay profile.  With ``array_gain`` the total is
    scaled by N_t N_r so that ``||H||_F^2`` has per-element normalization
    (the array responses used here are unit-norm).
    """

    exponent_los: float = 2.0
    exponent_nlos: float = 3.2
    decay_db_per_path: float = 3.0
    max_paths: int = 6
    array_gain: bool = True

    def fspl_1m_db(self, carrier_ghz):
        lam = SPEED_OF_LIGHT / (carrier_ghz * 1e9)
        return 20 * np.log10(4 * np.pi / lam)

    def path_loss_db(self, distance, los, carrier_ghz=28.0):
        n = self.exponent_los if los else self.exponent_nlos
        return self.fspl_1m_db(carrier_ghz) + 10 * n * np.log10(np.maximum(distance, 1.0))

    def mean_power(self, distance, los, carrier_ghz=28.0, n_r=1, n_t=1):
        p = 10 ** (-self.path_loss_db(distance, los, carrier_ghz) / 10)
        return p * (n_r * n_t if self.array_gain else 1)

    def profile(self, k):
        w = 10 ** (-self.decay_db_per_path * np.arange(k) / 10)
        return w / w.sum()


def sample_geometric_channel(bs_pos, ue_pos, los, rng, *, n_r, n_t, carrier_ghz=28.0,
                             blocked=False, model=PathLossModel(), d_over_lambda=0.5,
                             on_grid=False):
    """Off-grid multipath channel whose power follows a path-loss law.

    ``on_grid=True`` keeps the same power law but snaps every path onto a
    distinct DFT bin (the ideal-channel variant used by scenario sweeps).
    """
    if blocked:
        return MultipathChannel.zero(n_r, n_t, d_over_lambda)
    distance = float(np.linalg.norm(np.asarray(bs_pos, float) - np.asarray(ue_pos, float)))
    if not distance > 0:
        raise DegenerateGeometryError("BS and UE positions coincide")
    k = int(rng.integers(1, model.max_paths + 1))
    variances = model.mean_power(distance, los, carrier_ghz, n_r, n_t) * model.profile(k)
    if on_grid:
        return sample_ideal_channel(k, variances, n_r, n_t, rng, d_over_lambda=d_over_lambda)
    aoa = rng.uniform(-np.pi / 2, np.pi / 2, k)
    aod = rng.uniform(-np.pi / 2, np.pi / 2, k)
    gains = circular_normal(rng, k, variances)
    paths = tuple(PathComponent(complex(g), float(r), float(t), float(v))
                  for g, r, t, v in zip(gains, aoa, aod, variances))
    return MultipathChannel(paths, n_r, n_t, d_over_lambda)
