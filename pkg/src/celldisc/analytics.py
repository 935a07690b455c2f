"""Closed-form detection and false-alarm probabilities, coherence formulas and
Monte Carlo estimators used to check them."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import channel_from_bins, circular_normal, dft_matrix
from .codebook import Scheme, SchemeCodebook
from .errors import InvalidDimensionError, NumericalFailureError
from .measurement import SensingMatrix, observation_vector, sensing_matrix, simulate_observations, support_mask
from .detection import scheme_metrics


def binomial_se(p, n):
    return float(np.sqrt(p * (1 - p) / n)) if n > 0 else float("nan")


@dataclass(frozen=True)
class ProbabilityReport:
    trials: int
    pd_hits: int = 0
    pf_hits: int = 0
    pf_analytic: float | None = None
    pd_analytic: float | None = None
    pd_lower_bound: float | None = None

    @property
    def pd_mc(self):
        return self.pd_hits / self.trials

    @property
    def pf_mc(self):
        return self.pf_hits / self.trials

    @property
    def pd_se(self):
        return binomial_se(self.pd_mc, self.trials)

    @property
    def pf_se(self):
        return binomial_se(self.pf_mc, self.trials)

    def merge(self, other: "ProbabilityReport") -> "ProbabilityReport":
        """Pool the Bernoulli counts of two independent runs."""
        return ProbabilityReport(self.trials + other.trials, self.pd_hits + other.pd_hits,
                                 self.pf_hits + other.pf_hits, self.pf_analytic,
                                 self.pd_analytic, self.pd_lower_bound)


def _none_fire(tau, variances):
    """``prod_k (1 - exp(-tau / v_k))`` evaluated in the log domain."""
    v = np.asarray(variances, dtype=float).ravel()
    if tau <= 0:
        return 0.0 if v.size else 1.0
    with np.errstate(divide="ignore"):
        p = np.exp(-tau / v)  # v = 0 gives p = 0
        logs = np.log1p(-p)
    return float(np.exp(logs.sum()))


def pf_beam_sweep(tau, sigma_n2, n_t, n_r, support_size, beta_t=1, beta_r=1) -> float:
    """False alarm over the ``n_t n_r / (beta_t beta_r) - |S|`` noise-only slots."""
    if tau < 0 or sigma_n2 <= 0:
        raise InvalidDimensionError("need tau >= 0 and sigma_n2 > 0")
    slots = (n_t * n_r) // (beta_t * beta_r)
    if support_size > slots or support_size < 0:
        raise InvalidDimensionError(f"support size {support_size} exceeds {slots} slots")
    n = slots - support_size
    if n == 0:
        return 0.0
    return 1.0 - _none_fire(tau, np.full(n, sigma_n2))


def pd_nonoverlap(tau, sigma_n2, rho, variances) -> float:
    """Detection probability with disjoint per-BS supports, one slot per path."""
    lam = sigma_n2 + rho * np.asarray(variances, dtype=float).ravel()
    return 1.0 - _none_fire(tau, lam)


def pd_overlap_bound(tau, sigma_n2, rho, max_variance) -> float:
    """Lower bound on detection probability when supports may overlap."""
    lam = sigma_n2 + rho * max_variance
    return float(np.exp(-tau / lam)) if lam > 0 else float(tau <= 0)


def metric_covariance(psi_t, d_diag, rho, sigma_n2) -> np.ndarray:
    """Covariance of ``Psi_T^* y``: ``rho T D T + sigma_n2 T`` with ``T = Psi_T^* Psi_T``."""
    psi_t = np.asarray(psi_t)
    if psi_t.ndim == 1:
        psi_t = psi_t[:, None]
    T = psi_t.conj().T @ psi_t
    d = np.asarray(d_diag, dtype=float).ravel()
    if d.size != T.shape[0]:
        raise InvalidDimensionError("one variance per support column is required")
    C = rho * (T * d) @ T + sigma_n2 * T
    return (C + C.conj().T) / 2


def cs_eigenvalues(psi_t, d_diag, rho, sigma_n2) -> np.ndarray:
    C = metric_covariance(psi_t, d_diag, rho, sigma_n2)
    lam = np.linalg.eigvalsh(C)
    scale = max(1.0, float(np.abs(lam).max()) if lam.size else 1.0)
    if lam.size and lam.min() < -1e-9 * scale:
        raise NumericalFailureError(f"covariance has negative eigenvalue {lam.min():.3e}")
    return np.clip(lam, 0.0, None)


def pd_cs_exact(psi_t, d_diag, rho, sigma_n2, tau) -> float:
    """Matched-filter detection probability from the eigenvalues of the metric covariance.

    ``1 - prod_k (1 - exp(-tau / lambda_k))``.  This equals the probability
    that some support metric exceeds tau when ``Psi_T^* Psi_T`` is diagonal;
    with correlated support columns it is the product form over the
    decorrelated components.
    """
    psi_t = np.asarray(psi_t)
    if psi_t.ndim == 1:
        psi_t = psi_t[:, None]
    if psi_t.shape[1] < 1:
        raise InvalidDimensionError("support must contain at least one column")
    if np.linalg.matrix_rank(psi_t) < psi_t.shape[1]:
        warnings.warn("support columns are linearly dependent", RuntimeWarning, stacklevel=2)
    lam = cs_eigenvalues(psi_t, d_diag, rho, sigma_n2)
    return 1.0 - _none_fire(tau, lam)


class LowerBound(NamedTuple):
    value: float
    vacuous: bool


def pd_cs_lower_bound(support_size, mu, sigma_min2, rho, sigma_n2, tau) -> LowerBound:
    """Coherence-based lower bound; vacuous (value 0) once ``(|T| - 1) mu >= 1``."""
    mu_bar = 1.0 - (support_size - 1) * mu
    if mu_bar <= 0:
        return LowerBound(0.0, True)
    lam = rho * sigma_min2 * mu_bar**2 + sigma_n2 * mu_bar
    return LowerBound(1.0 - _none_fire(tau, np.full(support_size, lam)), False)


def scheme_mu_closed_form(scheme, *, n_t=None, n_bs=None, u=0):
    """Coherence formulas; ``None`` where only numeric values exist (RBF)."""
    scheme = Scheme.parse(scheme)
    if scheme in (Scheme.BEAM_SWEEP, Scheme.BEAM_COMBINE, Scheme.DIFF_BEAM_COMBINE):
        return 1.0
    if scheme is Scheme.DIFF_BEAM_SWEEP:
        if n_bs is None or n_bs < 1:
            raise InvalidDimensionError("DBS coherence needs n_bs >= 1")
        # a single BS has only orthogonal columns
        return float(np.sqrt(0.5 * (1 + np.cos(2 * np.pi / (n_bs + 1))))) if n_bs > 1 else 0.0
    if scheme is Scheme.MUBB:
        if n_t is None:
            raise InvalidDimensionError("MUBB coherence needs n_t")
        if n_bs is not None and n_bs << u == 1:
            return 0.0  # a single unitary block has orthonormal columns
        return float(np.sqrt((1 << u) / n_t))
    return None


@dataclass(frozen=True)
class FixedSupport:
    """On-grid support with per-path variances for every BS."""

    bins: tuple  # bins[i] = ((a, b), ...)
    variances: tuple  # variances[i] = (v, ...)

    @property
    def size(self):
        return sum(len(b) for b in self.bins)

    def all_variances(self):
        return np.concatenate([np.asarray(v, float) for v in self.variances]) if self.size else np.zeros(0)

    def disjoint(self):
        seen = [set(map(tuple, b)) for b in self.bins]
        return sum(len(s) for s in seen) == len(set().union(*seen))


def draw_fixed_support(path_counts, n_r, n_t, rng, alpha=0.5, disjoint=True) -> FixedSupport:
    """Distinct random bins per BS with variances ``n_t n_r alpha / K_i``.

    ``disjoint=True`` also keeps different BSs on different bins.
    """
    taken, bins, var = set(), [], []
    for k in path_counts:
        pool = np.array([f for f in range(n_r * n_t) if f not in taken]) if disjoint else np.arange(n_r * n_t)
        flat = rng.choice(pool, size=k, replace=False)
        if disjoint:
            taken.update(int(f) for f in flat)
        bins.append(tuple((int(f) // n_t, int(f) % n_t) for f in flat))
        var.append(tuple([n_t * n_r * alpha / k] * k) if k else ())
    return FixedSupport(tuple(bins), tuple(var))


def ideal_channels(support: FixedSupport, n_r, n_t, rng, trials) -> np.ndarray:
    """Batch ``(trials, n_bs, n_r, n_t)`` of on-grid channels with CN gains on the support."""
    G = np.zeros((trials, len(support.bins), n_r, n_t), dtype=complex)
    for i, (bins, var) in enumerate(zip(support.bins, support.variances)):
        for (a, b), v in zip(bins, var):
            G[:, i, a, b] += circular_normal(rng, trials, v)
    return dft_matrix(n_r) @ G @ dft_matrix(n_t).conj().T


def monte_carlo_probe(cb: SchemeCodebook, support: FixedSupport, rho, sigma_n2, tau, trials, rng, *,
                      sm: SensingMatrix | None = None, null_trials: bool = False, batch: int = 1000,
                      count_pf: bool = True) -> ProbabilityReport:
    """Empirical detection and false-alarm counts on ideal channels at a fixed threshold.

    A trial detects when any support metric exceeds ``tau`` and false-alarms
    when any off-support metric does.  With ``null_trials`` false alarms are
    counted on separate all-zero channels instead.  ``count_pf=False`` skips
    false alarms and, for compressive schemes, filters only the support
    columns.  ``cb`` must be built with the pilot power ``rho``.
    """
    if trials < 100:
        raise InvalidDimensionError("monte_carlo_probe needs at least 100 trials")
    if not np.isclose(cb.rho, rho):
        raise InvalidDimensionError(f"codebook pilot power {cb.rho} differs from rho={rho}")
    if not cb.scheme.sweep_family and sm is None:
        sm = sensing_matrix(cb)
    mask = support_mask(cb, support.bins)
    narrow = not count_pf and not cb.scheme.sweep_family
    if narrow:
        psi_s = sm.submatrix(np.flatnonzero(mask)).conj()
    pd_hits = pf_hits = 0
    for start in range(0, trials, batch):
        n = min(batch, trials - start)
        H = ideal_channels(support, cb.n_r, cb.n_t, rng, n)
        obs = simulate_observations(H, cb, sigma_n2, rng=rng)
        if narrow:
            z = np.abs(observation_vector(obs) @ psi_s) ** 2
            pd_hits += int(np.count_nonzero((z > tau).any(axis=1)))
            continue
        z, _ = scheme_metrics(obs, cb, sm)
        pd_hits += int(np.count_nonzero((z[:, mask] > tau).any(axis=1)))
        if not count_pf:
            continue
        if null_trials:
            z0, _ = scheme_metrics(simulate_observations(np.zeros_like(H), cb, sigma_n2, rng=rng), cb, sm)
            pf_hits += int(np.count_nonzero((z0 > tau).any(axis=1)))
        else:
            pf_hits += int(np.count_nonzero((z[:, ~mask] > tau).any(axis=1)))
    return ProbabilityReport(trials, pd_hits, pf_hits)


def on_grid_channel(support: FixedSupport, gains, n_r, n_t, i):
    """MultipathChannel for BS i of a fixed support with the given path gains."""
    return channel_from_bins(support.bins[i], gains, n_r, n_t, support.variances[i])
