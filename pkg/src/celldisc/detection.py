"""Detectors: energy thresholding, matched filtering, differential identity
decoding, threshold calibration, strongest-BS selection and beamforming gain."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import dft_matrix
from .codebook import SchemeCodebook, differential_pilots
from .errors import CalibrationError, DimensionMismatchError, InvalidDimensionError
from .measurement import ObservationSet, SensingMatrix, observation_vector


@dataclass(frozen=True)
class DetectionResult:
    """Indices whose metric exceeds ``tau``.

    Sweep detectors report observation indices ``m = q*P + p``; matched
    filters report sensing-matrix columns.  ``identities`` maps active
    indices to decoded BS indices (differential schemes only) and
    ``strongest`` is the (i, a, b) or (i, p, q) of the largest metric.
    """

    active: frozenset
    tau: float
    metric_max: float
    identities: dict | None = None
    strongest: tuple | None = None
    metrics: np.ndarray | None = field(default=None, repr=False, compare=False)


def _result(metrics, tau, identities=None, strongest=None):
    if tau < 0:
        raise InvalidDimensionError("threshold must be non-negative")
    metrics = np.asarray(metrics, dtype=float)
    active = frozenset(np.flatnonzero(metrics > tau).tolist())
    if identities is not None:
        identities = {k: int(identities[k]) for k in sorted(active)}
    mx = float(metrics.max()) if metrics.size else 0.0
    return DetectionResult(active, float(tau), mx, identities, strongest, metrics)


def energy_metrics(obs) -> np.ndarray:
    """``|y|^2`` per observation, or ``(|y| + |y~|)^2`` for two-phase observations."""
    y = obs.y if isinstance(obs, ObservationSet) else np.asarray(obs)
    if y.shape[-2] == 1:
        return np.abs(y[..., 0, :]) ** 2
    return (np.abs(y[..., 0, :]) + np.abs(y[..., 1, :])) ** 2


def threshold_detect(obs, tau: float) -> DetectionResult:
    """Observations with ``|y_{p,q}|^2 > tau`` (single-phase training)."""
    y = obs.y if isinstance(obs, ObservationSet) else np.asarray(obs)
    if y.ndim == 1:
        y = y[None]
    if y.shape[-2] != 1 or y.ndim != 2:
        raise DimensionMismatchError("threshold_detect expects one phase of one trial")
    z = energy_metrics(y)
    return _result(z, tau, strongest=(int(np.argmax(z)),))


def matched_filter_metrics(y, sm: SensingMatrix) -> np.ndarray:
    """``z_l = |psi_l^* y|^2`` for every column; y is (M,) or (..., M)."""
    y = np.asarray(y)
    if y.shape[-1] != sm.shape[0]:
        raise DimensionMismatchError(f"y has {y.shape[-1]} entries, sensing matrix has {sm.shape[0]} rows")
    flat = y.reshape(-1, y.shape[-1])
    z = np.abs(np.asarray(sm.adjoint_apply(flat.T)).T) ** 2
    return z.reshape(*y.shape[:-1], sm.shape[1])


def matched_filter_detect(y, sm: SensingMatrix, tau: float) -> DetectionResult:
    z = matched_filter_metrics(y, sm)
    if z.ndim != 1:
        raise DimensionMismatchError("matched_filter_detect handles one observation vector")
    return _result(z, tau, strongest=strongest_bs(z, sm))


def wrapped_distance(a, b):
    """Distance between angles on the unit circle, in [0, pi]."""
    return np.abs(np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b)))))


def differential_identities(y1, y2, n_bs: int) -> np.ndarray:
    """Decoded 0-based BS index for every observation pair.

    Nearest PSK point to ``arg(y2 y1^*)`` on the unit circle; ties go to the
    lowest index.
    """
    y1, y2 = np.asarray(y1), np.asarray(y2)
    if y1.shape != y2.shape:
        raise DimensionMismatchError("phase-1 and phase-2 observations differ in shape")
    phi = np.angle(y2 * y1.conj())[..., None]
    ref = np.angle(differential_pilots(n_bs))
    d = wrapped_distance(phi, ref)
    # treat round-off level differences as ties
    d = np.round(d, 12)
    return np.argmin(d, axis=-1)


def differential_detect(y1, y2, tau: float, n_bs: int) -> DetectionResult:
    """Active set by ``(|y| + |y~|)^2 > tau`` and a BS identity per active entry."""
    y1, y2 = np.asarray(y1).ravel(), np.asarray(y2).ravel()
    if y1.shape != y2.shape:
        raise DimensionMismatchError("phase-1 and phase-2 observations differ in shape")
    z = (np.abs(y1) + np.abs(y2)) ** 2
    ids = differential_identities(y1, y2, n_bs)
    m0 = int(np.argmax(z))
    return _result(z, tau, identities=ids, strongest=(int(ids[m0]), m0))


def strongest_bs(z, sm: SensingMatrix) -> tuple:
    """(i, a, b) of the largest metric; ties resolve to the lowest column."""
    l0 = int(np.argmax(np.asarray(z)))
    i, a, b = sm.col_map(l0)
    return int(i), int(a), int(b)


def tau_for_pf(pf: float, sigma_n2: float, n_null: int) -> float:
    """Threshold giving false-alarm probability ``pf`` over ``n_null`` i.i.d.
    CN(0, sigma_n2) noise-only observations."""
    if not 0 < pf < 1:
        raise InvalidDimensionError("pf must lie in (0, 1)")
    if n_null < 1:
        raise InvalidDimensionError("need at least one noise-only observation")
    return float(-sigma_n2 * np.log(-np.expm1(np.log1p(-pf) / n_null)))


def off_support_ratio(metrics, support_mask) -> np.ndarray:
    """Largest off-support metric over the largest metric, per trial.

    With the adaptive rule ``tau = kappa * max(metric)`` an off-support index
    fires exactly when this ratio exceeds kappa.
    """
    metrics = np.asarray(metrics, dtype=float)
    mask = np.broadcast_to(np.asarray(support_mask, bool), metrics.shape)
    off = np.where(mask, -np.inf, metrics).max(axis=-1)
    top = metrics.max(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(top > 0, off / top, 0.0)
    return np.where(np.isfinite(r), np.maximum(r, 0.0), 0.0)


def calibrate_threshold(ratios, target_pf: float, on_failure: str = "raise") -> float:
    """Smallest kappa with empirical ``P(ratio > kappa) <= target_pf``.

    ``ratios`` are samples of :func:`off_support_ratio`.  The answer is an
    order statistic, so repeated calibration on the same samples is exact.
    A kappa of 1 means no index may ever fire; that happens when the
    off-support maximum is the global maximum more often than ``target_pf``
    and is reported as a :class:`CalibrationError` unless
    ``on_failure='saturate'``.
    """
    r = np.sort(np.asarray(ratios, dtype=float).ravel())
    n = r.size
    if n == 0:
        raise InvalidDimensionError("no calibration samples")
    if not 0 < target_pf <= 1:
        raise InvalidDimensionError("target_pf must lie in (0, 1]")
    allowed = int(np.floor(target_pf * n + 1e-9))
    if allowed >= n:
        return 0.0
    kappa = float(r[n - allowed - 1])
    if kappa >= 1.0:
        atom = float(np.mean(r >= 1.0))
        if on_failure == "saturate":
            return 1.0
        raise CalibrationError(
            f"target P_F={target_pf} unreachable: the largest metric is off-support in "
            f"{atom:.3f} of trials", r_value=kappa, atom=atom)
    return kappa


def combined_beam(n, start, width):
    """Unit-norm sum of ``width`` adjacent DFT columns starting at ``start``."""
    F = dft_matrix(n)
    return F[:, start:start + width].sum(axis=1) / np.sqrt(width)


def beamforming_gain(H, p0: int, q0: int, beta_r: int = 1, beta_t: int = 1) -> float:
    """``|w_r^* H w_t|`` for beams steered at the detected bin.

    With ``beta > 1`` the indices address a beta_r x beta_t block of bins and
    the beams are unit-norm sums of its DFT columns.
    """
    H = np.asarray(H)
    n_r, n_t = H.shape
    if not (0 <= p0 * beta_r < n_r and 0 <= q0 * beta_t < n_t):
        raise InvalidDimensionError("detected indices outside the beam grid")
    w_r = combined_beam(n_r, p0 * beta_r, beta_r)
    w_t = combined_beam(n_t, q0 * beta_t, beta_t)
    return float(np.abs(w_r.conj() @ H @ w_t))


def scheme_metrics(obs: ObservationSet, cb: SchemeCodebook, sm: SensingMatrix | None = None):
    """Detection metrics and decoded identities for any scheme.

    Returns ``(metrics, identities)``: per-observation energies for the sweep
    family (identities only for the differential schemes) or matched-filter
    outputs over all sensing columns for the compressive schemes.
    """
    if cb.scheme.sweep_family:
        z = energy_metrics(obs)
        ids = differential_identities(obs.y[..., 0, :], obs.y[..., 1, :], cb.n_bs) if cb.scheme.differential else None
        return z, ids
    if sm is None:
        raise InvalidDimensionError("compressive schemes need the sensing matrix")
    return matched_filter_metrics(observation_vector(obs), sm), None
