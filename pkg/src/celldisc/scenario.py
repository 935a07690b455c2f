"""Network-level experiments: grid geometry, detection-probability curves,
RF-chain sweeps and beamforming-gain distributions.

Every realization is seeded from ``(seed, stage, r_index, trial)`` alone, so
all schemes in one run see the same networks (common random numbers) and
any split of the trials over workers merges to the same counts.  Receiver
noise additionally mixes in a hash of the scheme label.
"""
from __future__ import annotations

import csv
import hashlib
import io
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.constants import Boltzmann

from .channel import MultipathChannel, PathLossModel, angular_transform, dft_matrix, sample_geometric_channel
from .codebook import Scheme, SchemeCodebook, build_codebook
from .detection import beamforming_gain, calibrate_threshold, scheme_metrics
from .errors import CalibrationError, ConfigError, InvalidDimensionError
from .measurement import (SensingMatrix, best_rbf_draw, noiseless_observations, observation_noise,
                          sensing_matrix, support_mask)
from .measurement import ObservationSet

CALIBRATION, EVALUATION = 0, 1


def thermal_noise_variance(temperature_K, bandwidth_Hz) -> float:
    """Noise power ``k T B`` in watts."""
    if temperature_K < 0 or bandwidth_Hz < 0:
        raise InvalidDimensionError("temperature and bandwidth must be non-negative")
    return Boltzmann * temperature_K * bandwidth_Hz


@dataclass(frozen=True, eq=False)
class NetworkRealization:
    cell_length_m: float
    bs_positions: np.ndarray  # (n_bs, 2)
    ue_position: np.ndarray
    active: tuple
    los: tuple
    channels: tuple

    def matrices(self) -> np.ndarray:
        return np.stack([c.matrix() for c in self.channels])

    def nearest_active_distance(self):
        d = np.linalg.norm(self.bs_positions[list(self.active)] - self.ue_position, axis=1)
        return float(d.min())


def build_network(R, rng, *, n_r=8, n_t=64, n_bs=16, grid=4, n_active=4, n_los=2, carrier_ghz=28.0,
                  model=PathLossModel(), on_grid=False, d_over_lambda=0.5) -> NetworkRealization:
    """One BS uniformly inside each cell of a ``grid x grid`` layout of side R.

    With more BSs than cells they are spread evenly (BS j lives in cell
    ``j // (n_bs / cells)``).  The UE is uniform in a uniformly chosen cell;
    ``n_active`` BSs reach it, ``n_los`` of them in line of sight.
    """
    cells = grid * grid
    if R <= 0:
        raise InvalidDimensionError("cell length must be positive")
    if n_bs % cells:
        raise InvalidDimensionError(f"n_bs={n_bs} must be a multiple of the {cells} cells")
    if not 0 <= n_los <= n_active <= n_bs:
        raise InvalidDimensionError("need 0 <= n_los <= n_active <= n_bs")
    cell = np.arange(n_bs) // (n_bs // cells)
    corner = np.stack([cell % grid, cell // grid], axis=1) * R
    bs = corner + rng.uniform(0, R, (n_bs, 2))
    c = int(rng.integers(cells))
    ue = np.array([c % grid, c // grid]) * R + rng.uniform(0, R, 2)
    active = np.sort(rng.choice(n_bs, n_active, replace=False))
    los = np.sort(rng.choice(active, n_los, replace=False))
    channels = []
    for j in range(n_bs):
        if j in active:
            channels.append(sample_geometric_channel(bs[j], ue, bool(j in los), rng, n_r=n_r, n_t=n_t,
                                                     carrier_ghz=carrier_ghz, model=model,
                                                     d_over_lambda=d_over_lambda, on_grid=on_grid))
        else:
            channels.append(MultipathChannel.zero(n_r, n_t, d_over_lambda))
    return NetworkRealization(float(R), bs, ue, tuple(int(a) for a in active),
                              tuple(int(a) for a in los), tuple(channels))


@dataclass(frozen=True)
class SchemeSpec:
    scheme: Scheme
    u: int = 0
    beta_t: int = 1
    beta_r: int = 1
    n_rf: int = 1
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not self.name:
            object.__setattr__(self, "name", self.default_name())

    def default_name(self):
        s = self.scheme
        if s in (Scheme.MUBB, Scheme.RBF):
            base = f"{s.value}_u{self.u}"
        elif s in (Scheme.BEAM_COMBINE, Scheme.DIFF_BEAM_COMBINE):
            base = f"{s.value}_bt{self.beta_t}_br{self.beta_r}"
        else:
            base = s.value
        return base + (f"_rf{self.n_rf}" if self.n_rf > 1 else "")


@dataclass(frozen=True)
class ExperimentConfig:
    schemes: tuple = (SchemeSpec(Scheme.MUBB),)
    n_t: int = 64
    n_r: int = 8
    n_bs: int = 16
    r_grid: tuple = (100.0, 200.0, 400.0, 800.0, 1600.0)
    trials: int = 500
    calib_trials: int | None = None  # default ceil(100 / target_pf)
    target_pf: float = 0.1
    rho: float = 1.0  # pilot power, W
    seed: int = 0
    temperature_K: float = 293.0
    bandwidth_Hz: float = 800e6
    sigma_n2: float | None = None  # overrides kTB when set
    carrier_ghz: float = 28.0
    d_over_lambda: float = 0.5
    channel_mode: str = "geometric"  # or "ideal" (same power law, on-grid paths)
    criterion: str = "any_bs"  # or "strongest_bs"
    kappa_mode: str = "per_r"  # or "global"
    on_calibration_failure: str = "saturate"  # or "raise"
    rbf_draws: int = 20
    rf_chains: tuple = (1, 2, 4)
    chunk: int = 250
    threads: int = 1

    def __post_init__(self):
        if min(self.n_t, self.n_r, self.n_bs, self.trials, self.chunk, self.threads) < 1:
            raise ConfigError("all counts must be positive")
        if not 0 < self.target_pf < 1:
            raise ConfigError("target_pf must lie in (0, 1)")
        if self.channel_mode not in ("geometric", "ideal"):
            raise ConfigError(f"unknown channel_mode {self.channel_mode!r}")
        if self.criterion not in ("any_bs", "strongest_bs"):
            raise ConfigError(f"unknown criterion {self.criterion!r}")
        if self.kappa_mode not in ("per_r", "global"):
            raise ConfigError(f"unknown kappa_mode {self.kappa_mode!r}")
        if self.on_calibration_failure not in ("saturate", "raise"):
            raise ConfigError(f"unknown on_calibration_failure {self.on_calibration_failure!r}")
        if any(r <= 0 for r in self.r_grid) or not self.r_grid:
            raise ConfigError("r_grid must hold positive cell lengths")
        if self.rho <= 0:
            raise ConfigError("rho must be positive")

    @property
    def noise_variance(self):
        if self.sigma_n2 is not None:
            return float(self.sigma_n2)
        return thermal_noise_variance(self.temperature_K, self.bandwidth_Hz)

    @property
    def n_calibration(self):
        need = int(np.ceil(100 / self.target_pf))
        return max(need, self.calib_trials or 0)

    def digest(self) -> str:
        """Short stable hash of every field, written on each CSV row."""
        text = repr(sorted((k, repr(v)) for k, v in self.__dict__.items() if k != "threads"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def trial_rng(seed, stage, r_index, trial, label=None):
    key = [seed, stage, r_index, trial]
    if label is not None:
        key.append(zlib.crc32(label.encode()))
    return np.random.default_rng(np.random.SeedSequence(key))


@lru_cache(maxsize=32)
def _rbf_codebook(n_t, n_r, u, n_bs, n_rf, draws, seed, rho):
    return best_rbf_draw(n_t, n_r, u, n_bs, n_rf=n_rf, draws=draws, seed=seed, rho=rho).codebook


@lru_cache(maxsize=32)
def _codebook(spec: SchemeSpec, n_t, n_r, n_bs, rho, draws, seed):
    if spec.scheme is Scheme.RBF:
        cb = _rbf_codebook(n_t, n_r, spec.u, n_bs, spec.n_rf, draws, seed, rho)
    else:
        cb = build_codebook(spec.scheme, n_t, n_r, n_bs, rho=rho, u=spec.u,
                            beta_t=spec.beta_t, beta_r=spec.beta_r)
    sm = None if cb.scheme.sweep_family else sensing_matrix(cb)
    return cb, sm


def scheme_setup(spec: SchemeSpec, cfg: ExperimentConfig):
    """Codebook and (for compressive schemes) sensing matrix of one scheme."""
    return _codebook(spec, cfg.n_t, cfg.n_r, cfg.n_bs, cfg.rho, cfg.rbf_draws, cfg.seed)


@dataclass
class NetworkBatch:
    """Channels and ground truth of consecutive realizations."""

    H: np.ndarray  # (B, n_bs, n_r, n_t)
    bins: list  # per trial, per BS: tuple of (a, b) above half the BS's peak
    clutter: list  # per trial, per BS: other bins received above the noise floor
    strongest: np.ndarray  # (B, 3): i, a, b of the largest angular entry
    trials: np.ndarray


def network_batch(cfg: ExperimentConfig, R, stage, r_index, trials) -> NetworkBatch:
    H = np.zeros((len(trials), cfg.n_bs, cfg.n_r, cfg.n_t), dtype=complex)
    bins, clutter, strongest = [], [], np.zeros((len(trials), 3), dtype=int)
    floor = cfg.noise_variance / cfg.rho
    for j, t in enumerate(trials):
        net = build_network(R, trial_rng(cfg.seed, stage, r_index, int(t)), n_r=cfg.n_r, n_t=cfg.n_t,
                            n_bs=cfg.n_bs, carrier_ghz=cfg.carrier_ghz, d_over_lambda=cfg.d_over_lambda,
                            on_grid=cfg.channel_mode == "ideal")
        per_bs, weak, best = [()] * cfg.n_bs, [()] * cfg.n_bs, (-1.0, 0, 0, 0)
        for i in net.active:
            H[j, i] = net.channels[i].matrix()
            ang = angular_transform(H[j, i])
            per_bs[i] = tuple(sorted(ang.support))
            above = np.argwhere((np.abs(ang.g) ** 2 > floor) & ~ang.support_mask())
            weak[i] = tuple(map(tuple, above.tolist()))
            a, b = np.unravel_index(np.argmax(np.abs(ang.g)), ang.g.shape)
            peak = float(np.abs(ang.g[a, b]) ** 2)
            if peak > best[0]:
                best = (peak, i, int(a), int(b))
        bins.append(per_bs)
        clutter.append(weak)
        strongest[j] = best[1:]
    return NetworkBatch(H, bins, clutter, strongest, np.asarray(trials))


@dataclass
class TrialStats:
    """Per-trial sufficient statistics of one scheme under the rule ``tau = kappa max z``.

    ``valid_ratio``: best correctly attributed metric over the maximum (the
    trial succeeds for criterion any_bs iff it exceeds kappa).
    ``off_ratio``: best metric over the maximum among indices that see no
    angular bin received above the noise floor (false alarm iff it exceeds
    kappa).  Sub-threshold paths of active BSs are neither hits nor false
    alarms.  ``strongest_ok``: the argmax names the strongest
    BS and its strongest bin.  ``gain``: beamforming gain at the argmax.
    """

    valid_ratio: np.ndarray
    off_ratio: np.ndarray
    strongest_ok: np.ndarray
    gain: np.ndarray

    @classmethod
    def concat(cls, parts):
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("valid_ratio", "off_ratio", "strongest_ok", "gain")))


def _ratio(z, mask):
    top = z.max(axis=-1)
    part = np.where(mask, z, -np.inf).max(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(top > 0, part / top, 0.0)
    return np.where(np.isfinite(r), np.maximum(r, 0.0), 0.0)


def _block_index(cb, a, b):
    P, Q = cb.grid
    return (b // (cb.n_t // Q)) * P + a // (cb.n_r // P)


def score_batch(cb: SchemeCodebook, sm: SensingMatrix | None, batch: NetworkBatch, sigma_n2, cfg, label,
                stage, r_index, n_rf=None) -> TrialStats:
    """Simulate one scheme over a network batch and reduce to :class:`TrialStats`."""
    y = noiseless_observations(batch.H, cb)
    if sigma_n2 > 0:
        y = y + np.stack([observation_noise(cb, sigma_n2, trial_rng(cfg.seed, stage, r_index, int(t), label),
                                            n_rf=n_rf) for t in batch.trials])
    z, ids = scheme_metrics(ObservationSet(y, sigma_n2, np.arange(y.shape[-1])), cb, sm)
    B, L = z.shape
    union = np.zeros((B, L), dtype=bool)
    known = np.zeros((B, L), dtype=bool)
    valid = np.zeros((B, L), dtype=bool)
    for j, bins in enumerate(batch.bins):
        union[j] = support_mask(cb, bins)
        known[j] = union[j] | support_mask(cb, batch.clutter[j])
        if ids is None:
            valid[j] = union[j]
        else:
            for i, bb in enumerate(bins):
                if bb:
                    valid[j] |= support_mask(cb, [bb if k == i else () for k in range(cb.n_bs)]) & (ids[j] == i)
    l0 = z.argmax(axis=1)
    ok = np.zeros(B, dtype=bool)
    gain = np.zeros(B)
    Fr, Ft = dft_matrix(cb.n_r), dft_matrix(cb.n_t)
    for j in range(B):
        i_s, a_s, b_s = batch.strongest[j]
        if cb.scheme.sweep_family:
            P = cb.grid[0]
            p0, q0 = int(l0[j]) % P, int(l0[j]) // P
            i0 = int(ids[j, l0[j]]) if ids is not None else i_s
            ok[j] = l0[j] == _block_index(cb, a_s, b_s) and i0 == i_s
            br, bt = cb.n_r // P, cb.n_t // cb.grid[1]
            gain[j] = beamforming_gain(batch.H[j, i0], p0, q0, br, bt)
        else:
            i0, a0, b0 = sm.col_map(int(l0[j]))
            ok[j] = (i0, a0, b0) == (i_s, a_s, b_s)
            gain[j] = abs(Fr[:, a0].conj() @ batch.H[j, i0] @ Ft[:, b0])
    ok &= z.max(axis=1) > 0
    return TrialStats(_ratio(z, valid), _ratio(z, ~known), ok, gain)


def _chunks(n, size):
    return [np.arange(s, min(n, s + size)) for s in range(0, n, size)]


def collect_stats(cfg: ExperimentConfig, specs, stage, n_trials) -> dict:
    """``{(spec.name, r_index): TrialStats}`` for every scheme and cell length.

    Networks are generated once per chunk and shared by all schemes.
    """
    setups = [(s, *scheme_setup(s, cfg)) for s in specs]
    sigma_n2 = cfg.noise_variance
    jobs = [(r, R, tr) for r, R in enumerate(cfg.r_grid) for tr in _chunks(n_trials, cfg.chunk)]

    def run(job):
        r, R, tr = job
        batch = network_batch(cfg, R, stage, r, tr)
        return {s.name: score_batch(cb, sm, batch, sigma_n2, cfg, s.name, stage, r,
                                    n_rf=s.n_rf if cb.grid is not None else None)
                for s, cb, sm in setups}

    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    out = {}
    for (r, _, _), res in zip(jobs, results):
        for name, st in res.items():
            out.setdefault((name, r), []).append(st)
    return {k: TrialStats.concat(v) for k, v in out.items()}


def _se(p, n):
    return float(np.sqrt(p * (1 - p) / n))


@dataclass(frozen=True)
class CurvePoint:
    scheme: str
    m: int
    R: float
    trials: int
    pd_hat: float
    pd_stderr: float
    kappa: float
    pf_hat: float
    calibration: str
    n_rf: int = 1


def _kappa(cfg, ratios, R):
    try:
        return calibrate_threshold(ratios, cfg.target_pf, on_failure="raise"), "ok"
    except CalibrationError as e:
        if cfg.on_calibration_failure == "raise":
            raise CalibrationError(f"R={R}: {e}", r_value=e.r_value, atom=e.atom) from e
        return 1.0, "saturated"


def _firing_rule(kappa, status):
    """Indices with ratio above kappa fire; a saturated calibration keeps
    only the maximum itself (the kappa -> 1 limit from below)."""
    if status == "saturated":
        return lambda ratio: ratio >= 1.0
    return lambda ratio: ratio > kappa


def detection_points(cfg: ExperimentConfig, specs=None) -> list:
    """Calibrate kappa on one set of realizations, then estimate P_D on a fresh set."""
    specs = tuple(cfg.schemes if specs is None else specs)
    cal = collect_stats(cfg, specs, CALIBRATION, cfg.n_calibration)
    ev = collect_stats(cfg, specs, EVALUATION, cfg.trials)
    points = []
    for s in specs:
        cb, _ = scheme_setup(s, cfg)
        if cfg.kappa_mode == "global":
            pooled = np.concatenate([cal[s.name, r].off_ratio for r in range(len(cfg.r_grid))])
            kap = [_kappa(cfg, pooled, "all")] * len(cfg.r_grid)
        else:
            kap = [_kappa(cfg, cal[s.name, r].off_ratio, R) for r, R in enumerate(cfg.r_grid)]
        for r, R in enumerate(cfg.r_grid):
            st, (kappa, status) = ev[s.name, r], kap[r]
            fires = _firing_rule(kappa, status)
            hit = fires(st.valid_ratio) if cfg.criterion == "any_bs" else st.strongest_ok
            pd = float(hit.mean())
            pf = float(fires(st.off_ratio).mean())
            points.append(CurvePoint(s.name, cb.m_total, float(R), cfg.trials, pd, _se(pd, cfg.trials),
                                     kappa, pf, status, s.n_rf))
    return points


CURVE_HEADER = ("config_hash", "scheme", "M", "R", "trials", "pd_hat", "pd_stderr", "kappa", "pf_hat",
                "calibration")


def run_detection_curve(cfg: ExperimentConfig) -> str:
    """CSV of P_D versus cell length for every scheme in ``cfg``."""
    h = cfg.digest()
    rows = [(h, p.scheme, p.m, p.R, p.trials, p.pd_hat, p.pd_stderr, p.kappa, p.pf_hat, p.calibration)
            for p in detection_points(cfg)]
    return to_csv(CURVE_HEADER, rows)


def rf_chain_points(cfg: ExperimentConfig) -> list:
    specs = []
    for s in cfg.schemes:
        for n in cfg.rf_chains:
            if n < 1:
                raise ConfigError("RF chain counts must be positive")
            specs.append(replace(s, n_rf=n, name=""))
    return detection_points(cfg, specs)


RF_HEADER = ("config_hash", "n_rf", "scheme", "M", "R", "trials", "pd_hat", "pd_stderr", "kappa")


def run_rf_chain_study(cfg: ExperimentConfig) -> str:
    h = cfg.digest()
    rows = [(h, p.n_rf, p.scheme, p.m, p.R, p.trials, p.pd_hat, p.pd_stderr, p.kappa)
            for p in rf_chain_points(cfg)]
    return to_csv(RF_HEADER, rows)


def bfgain_samples(cfg: ExperimentConfig, specs=None) -> dict:
    """Beamforming gains ``{(scheme, R): array}`` at the strongest detected metric."""
    specs = tuple(cfg.schemes if specs is None else specs)
    for s in specs:
        if s.scheme in (Scheme.BEAM_SWEEP, Scheme.BEAM_COMBINE):
            raise ConfigError(f"{s.name}: plain sweep schemes cannot identify the BS")
    ev = collect_stats(cfg, specs, EVALUATION, cfg.trials)
    return {(s.name, float(R)): ev[s.name, r].gain for s in specs for r, R in enumerate(cfg.r_grid)}


BFGAIN_HEADER = ("config_hash", "scheme", "R", "M", "gain_value", "cdf")


def run_bfgain_cdf(cfg: ExperimentConfig, points: int = 100) -> str:
    """Empirical gain CDF sampled at ``points`` evenly spaced probabilities."""
    h = cfg.digest()
    m = {s.name: scheme_setup(s, cfg)[0].m_total for s in cfg.schemes}
    levels = np.arange(1, points + 1) / points
    rows = []
    for (name, R), g in bfgain_samples(cfg).items():
        q = np.quantile(g, levels, method="inverted_cdf")
        rows += [(h, name, R, m[name], float(v), float(c)) for v, c in zip(q, levels)]
    return to_csv(BFGAIN_HEADER, rows)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.9g" % v
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()
