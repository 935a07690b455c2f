"""Training-phase beamformers and pilots for every cell-discovery scheme.

A codebook lists M observations per phase.  Observation m pairs receive
beam ``w_r[:, r_idx[m]]`` with transmit beam ``w_t[i][:, t_idx[m]]`` of every
BS i, which sends pilot ``pilots[phase, m, i]``.  Grid schemes enumerate all
(p, q) combinations with ``m = q * P + p`` (column-major vectorization of the
P x Q observation matrix).  RBF uses fresh beams per observation instead.

BS indices are 0-based throughout; BS i uses PSK point ``i + 1`` in the
second phase of the differential schemes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .channel import dft_matrix
from .errors import (CapacityExceededError, InvalidDimensionError, InvalidPartitionError,
                     UnsupportedDimensionError)
from .gf import prime_power
from .mub import fourier_member, mub_family


class Scheme(enum.Enum):
    BEAM_SWEEP = "bs"
    BEAM_COMBINE = "bc"
    DIFF_BEAM_SWEEP = "dbs"
    DIFF_BEAM_COMBINE = "dbc"
    MUBB = "mubb"
    RBF = "rbf"

    @property
    def differential(self):
        return self in (Scheme.DIFF_BEAM_SWEEP, Scheme.DIFF_BEAM_COMBINE)

    @property
    def sweep_family(self):
        """Schemes detected per (p, q) observation rather than per sensing column."""
        return self in (Scheme.BEAM_SWEEP, Scheme.BEAM_COMBINE,
                        Scheme.DIFF_BEAM_SWEEP, Scheme.DIFF_BEAM_COMBINE)

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        aliases = {"beamsweep": "bs", "beamcombine": "bc", "diffbeamsweep": "dbs",
                   "diffbeamcombine": "dbc", "mub": "mubb"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True, eq=False)
class SchemeCodebook:
    scheme: Scheme
    w_r: np.ndarray  # (n_r, P')
    w_t: np.ndarray  # (n_bs, n_t, Q')
    pilots: np.ndarray  # (phases, M, n_bs)
    r_idx: np.ndarray  # (M,)
    t_idx: np.ndarray  # (M,)
    params: dict = field(default_factory=dict)
    grid: tuple | None = None  # (P, Q) for grid schemes
    n_rf: int = 1  # RBF only: observations sharing one transmit slot
    # exact DFT-domain coefficients: w_r = F_r r_coef, w_t[i] = F_t t_coef[i]
    r_coef: np.ndarray | None = None
    t_coef: np.ndarray | None = None

    def __post_init__(self):
        for name in ("w_r", "w_t", "pilots", "r_idx", "t_idx", "r_coef", "t_coef"):
            if getattr(self, name) is not None:
                getattr(self, name).setflags(write=False)

    @property
    def phases(self):
        return self.pilots.shape[0]

    @property
    def m(self):
        """Observations per phase."""
        return len(self.r_idx)

    @property
    def m_total(self):
        return self.phases * self.m

    @property
    def n_bs(self):
        return self.w_t.shape[0]

    @property
    def n_t(self):
        return self.w_t.shape[1]

    @property
    def n_r(self):
        return self.w_r.shape[0]

    @property
    def rho(self):
        return self.params.get("rho", 1.0)

    def tx_power(self, i=0):
        """Sum of squared transmit-beam norms over one phase of the training."""
        norms = np.sum(np.abs(self.w_t[i]) ** 2, axis=0)
        return float(norms[self.t_idx].sum())

    def label(self):
        extra = {Scheme.MUBB: "u", Scheme.RBF: "u"}.get(self.scheme)
        s = self.scheme.value
        if self.scheme in (Scheme.BEAM_COMBINE, Scheme.DIFF_BEAM_COMBINE):
            s += f"_bt{self.params['beta_t']}_br{self.params['beta_r']}"
        elif extra:
            s += f"_u{self.params['u']}"
        return s


def _dft_apply(n, coef):
    """``F_n @ coef``; real coefficients take two real products."""
    F = dft_matrix(n)
    if np.iscomplexobj(coef):
        return F @ coef
    ct = np.swapaxes(coef, -1, -2)  # multiply from the right on the stored layout
    re, im = np.ascontiguousarray(F.real.T), np.ascontiguousarray(F.imag.T)
    return np.swapaxes(ct @ re + 1j * (ct @ im), -1, -2)


def _grid_indices(P, Q):
    m = np.arange(P * Q)
    return m % P, m // P


def differential_pilots(n_bs: int) -> np.ndarray:
    """Second-phase PSK symbols ``exp(j 2 pi i / (n_bs + 1))``, i = 1..n_bs."""
    if n_bs < 1:
        raise InvalidDimensionError("need at least one BS")
    return np.exp(2j * np.pi * np.arange(1, n_bs + 1) / (n_bs + 1))


def _pilot_tensor(M, n_bs, rho, differential):
    first = np.full((M, n_bs), np.sqrt(rho), dtype=complex)
    if not differential:
        return first[None]
    second = np.sqrt(rho) * np.broadcast_to(differential_pilots(n_bs), (M, n_bs))
    return np.stack([first, second])


def _check_sizes(n_t, n_r, n_bs):
    if min(n_t, n_r, n_bs) < 1:
        raise InvalidDimensionError("n_t, n_r and n_bs must be >= 1")


def beam_sweep_codebook(n_t, n_r, n_bs=1, rho=1.0, *, differential=False):
    _check_sizes(n_t, n_r, n_bs)
    return beam_combine_codebook(n_t, n_r, 1, 1, n_bs, rho, differential=differential)


def beam_combine_codebook(n_t, n_r, beta_t, beta_r, n_bs=1, rho=1.0, *, differential=False):
    """Widened beams: sums of beta adjacent DFT columns.

    Receive beams are unit norm; transmit beams carry ``sqrt(beta_r)`` so each
    has squared norm ``beta_t * beta_r`` and the per-BS training power matches
    the exhaustive sweep.
    """
    _check_sizes(n_t, n_r, n_bs)
    if beta_t < 1 or beta_r < 1 or n_t % beta_t or n_r % beta_r:
        raise InvalidPartitionError(
            f"beta_t={beta_t}, beta_r={beta_r} must divide n_t={n_t}, n_r={n_r}")
    P, Q = n_r // beta_r, n_t // beta_t
    r_coef = np.kron(np.eye(P), np.ones((beta_r, 1))) / np.sqrt(beta_r)
    t_coef = np.sqrt(beta_r) * np.kron(np.eye(Q), np.ones((beta_t, 1)))
    w_r = _dft_apply(n_r, r_coef)
    w_t = _dft_apply(n_t, t_coef)
    r_idx, t_idx = _grid_indices(P, Q)
    if beta_t == beta_r == 1:
        scheme = Scheme.DIFF_BEAM_SWEEP if differential else Scheme.BEAM_SWEEP
    else:
        scheme = Scheme.DIFF_BEAM_COMBINE if differential else Scheme.BEAM_COMBINE
    return SchemeCodebook(
        scheme, w_r, np.repeat(w_t[None], n_bs, axis=0), _pilot_tensor(P * Q, n_bs, rho, differential),
        r_idx, t_idx, dict(beta_t=beta_t, beta_r=beta_r, n_bs=n_bs, rho=rho), (P, Q),
        r_coef=r_coef, t_coef=np.repeat(t_coef[None], n_bs, axis=0))


def mubb_capacity(n_t, u):
    """Largest BS count the MUB design supports for given n_t and u.

    Each BS consumes 2^u non-identity bases of dimension n_t / 2^u, of which
    there are n_t / 2^u.
    """
    return (n_t >> u) >> u


def mubb_codebook(n_t, n_r, u, n_bs, rho=1.0):
    """Beams from rows of concatenated MUB matrices.

    BS i (0-based) uses the non-identity bases ``2^u i .. 2^u (i+1) - 1`` of
    the n_t/2^u family, horizontally concatenated into ``M^(i)``; the UE uses
    the Fourier-type member of the n_r family.
    """
    _check_sizes(n_t, n_r, n_bs)
    if u < 0 or n_t % (1 << u):
        raise InvalidDimensionError(f"2^u must divide n_t (n_t={n_t}, u={u})")
    d = n_t >> u
    for dim in (d, n_r):
        if dim > 1 and prime_power(dim) is None:
            raise UnsupportedDimensionError(f"dimension {dim} is not a prime power")
    if n_bs > mubb_capacity(n_t, u):
        raise CapacityExceededError(
            f"n_bs={n_bs} exceeds the {mubb_capacity(n_t, u)} BSs supported by n_t={n_t}, u={u}")
    blocks = mub_family(d, 1 + (n_bs << u)).bases[1:]
    m_rx = fourier_member(n_r) if n_r > 1 else np.ones((1, 1), complex)
    r_coef = m_rx.conj().T  # column p: (row p of M)^*
    t_coef = np.stack([np.hstack(blocks[i << u:(i + 1) << u]).T for i in range(n_bs)])  # rows of M^(i)
    w_r = _dft_apply(n_r, r_coef)
    w_t = _dft_apply(n_t, t_coef)
    r_idx, t_idx = _grid_indices(n_r, d)
    return SchemeCodebook(Scheme.MUBB, w_r, w_t, _pilot_tensor(n_r * d, n_bs, rho, False),
                          r_idx, t_idx, dict(u=u, n_bs=n_bs, rho=rho), (n_r, d),
                          r_coef=r_coef, t_coef=t_coef)


def rbf_codebook(n_t, n_r, u, n_bs, m_obs=None, rho=1.0, rng=None, *, n_rf=1):
    """Rademacher beams in the DFT domain, redrawn for every observation.

    With ``n_rf`` receive chains, ``n_rf`` consecutive observations form one
    time slot: they share the transmit beams and use distinct random receive
    beams.
    """
    _check_sizes(n_t, n_r, n_bs)
    if rng is None:
        rng = np.random.default_rng()
    expected = n_t * n_r >> u
    if m_obs is None:
        m_obs = expected
    if u < 0 or (n_t * n_r) % (1 << u) or m_obs != expected:
        raise InvalidDimensionError(f"m_obs must equal n_t*n_r/2^u = {expected}")
    if n_rf < 1 or m_obs % n_rf:
        raise InvalidDimensionError(f"n_rf={n_rf} must divide m_obs={m_obs}")
    slots = m_obs // n_rf
    v = rng.choice([-1.0, 1.0], size=(n_bs, slots, n_t)) * np.sqrt((1 << u) / n_t)
    uu = rng.choice([-1.0, 1.0], size=(m_obs, n_r)) / np.sqrt(n_r)
    t_coef, r_coef = v.transpose(0, 2, 1), uu.T
    w_t = _dft_apply(n_t, t_coef)
    w_r = _dft_apply(n_r, r_coef)
    m = np.arange(m_obs)
    return SchemeCodebook(Scheme.RBF, w_r, w_t, _pilot_tensor(m_obs, n_bs, rho, False),
                          m, m // n_rf, dict(u=u, n_bs=n_bs, n_rf=n_rf, rho=rho), None, n_rf,
                          r_coef=r_coef, t_coef=t_coef)


def build_codebook(scheme, n_t, n_r, n_bs, *, rho=1.0, u=0, beta_t=1, beta_r=1, n_rf=1, rng=None):
    """Dispatch on a scheme name with the union of all scheme parameters."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.BEAM_SWEEP:
        return beam_sweep_codebook(n_t, n_r, n_bs, rho)
    if scheme is Scheme.DIFF_BEAM_SWEEP:
        return beam_sweep_codebook(n_t, n_r, n_bs, rho, differential=True)
    if scheme in (Scheme.BEAM_COMBINE, Scheme.DIFF_BEAM_COMBINE):
        return beam_combine_codebook(n_t, n_r, beta_t, beta_r, n_bs, rho,
                                     differential=scheme.differential)
    if scheme is Scheme.MUBB:
        return mubb_codebook(n_t, n_r, u, n_bs, rho)
    return rbf_codebook(n_t, n_r, u, n_bs, None, rho, rng, n_rf=n_rf)
