"""Training observations, the equivalent sensing matrix and its coherence."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.linalg.blas import ssyrk

from .channel import MultipathChannel, dft_matrix
from .codebook import SchemeCodebook
from .errors import DegenerateMatrixError, DimensionMismatchError, InvalidDimensionError


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Raw received samples ``y[..., phase, m]`` (m in codebook order).

    ``slot[m]`` is the time slot of observation m; observations in one slot
    are taken by different RF chains and share the same physical noise vector.
    """

    y: np.ndarray
    sigma_n2: float
    slot: np.ndarray
    n_rf: int = 1

    @property
    def phases(self):
        return self.y.shape[-2]

    @property
    def m_total(self):
        return self.y.shape[-2] * self.y.shape[-1]

    @property
    def n_slots(self):
        return int(self.slot.max()) + 1 if self.slot.size else 0

    def grid(self, P, Q):
        """Observations as ``[..., phase, p, q]``."""
        return self.y.reshape(*self.y.shape[:-1], Q, P).swapaxes(-1, -2)


def slot_map(cb: SchemeCodebook, n_rf: int | None = None) -> np.ndarray:
    """Time slot of each observation when ``n_rf`` receive chains are available.

    Grid codebooks split the P receive beams of every transmit beam into
    ceil(P / n_rf) groups; RBF slots are fixed by the codebook.
    """
    if cb.grid is None:
        if n_rf not in (None, cb.n_rf):
            raise DimensionMismatchError(
                f"RBF codebook was drawn for n_rf={cb.n_rf}, simulation asked for {n_rf}")
        return cb.t_idx.copy()
    n_rf = 1 if n_rf is None else n_rf
    P = cb.grid[0]
    if not 1 <= n_rf <= P:
        raise InvalidDimensionError(f"n_rf={n_rf} must lie in [1, P={P}]")
    groups = -(-P // n_rf)
    return cb.t_idx * groups + cb.r_idx // n_rf


def _channel_array(channels, cb):
    if isinstance(channels, np.ndarray):
        H = channels
    else:
        H = np.stack([c.matrix() if isinstance(c, MultipathChannel) else np.asarray(c) for c in channels])
    if H.shape[-3:] != (cb.n_bs, cb.n_r, cb.n_t):
        raise DimensionMismatchError(
            f"channels have shape {H.shape[-3:]}, codebook expects {(cb.n_bs, cb.n_r, cb.n_t)}")
    return H


def noiseless_observations(H, cb: SchemeCodebook) -> np.ndarray:
    """Signal part of every observation, shape ``(..., phases, M)``."""
    HW = H @ cb.w_t  # (..., n_bs, n_r, Q')
    if cb.grid is not None:
        # every (p, q) pair is observed once: form the whole beam grid
        s = (cb.w_r.conj().T @ HW)[..., cb.r_idx, cb.t_idx]
    else:
        s = np.einsum("am,...iam->...im", cb.w_r.conj()[:, cb.r_idx], HW[..., cb.t_idx])
    return np.einsum("kmi,...im->...km", cb.pilots, s)


def observation_noise(cb: SchemeCodebook, sigma_n2: float, rng, batch=(), n_rf: int | None = None):
    """Receiver noise of every observation, shape ``(*batch, phases, M)``.

    Each slot has one CN(0, sigma_n2 I) vector at the array, projected on the
    receive beam of every RF chain active in that slot.
    """
    slot = slot_map(cb, n_rf)
    n_slots = int(slot.max()) + 1
    wr = cb.w_r.conj()[:, cb.r_idx]
    if n_slots == slot.size:
        # one beam per slot: the projection of white noise is CN(0, sigma_n2 |w_r|^2)
        scale = np.sqrt(sigma_n2 / 2) * np.linalg.norm(wr, axis=0)
        shape = (*batch, cb.phases, slot.size)
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    shape = (*batch, cb.phases, n_slots, cb.n_r)
    noise = np.sqrt(sigma_n2 / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return np.einsum("am,...kma->...km", wr, noise[..., slot, :])


def simulate_observations(channels, cb: SchemeCodebook, sigma_n2: float, n_rf: int | None = None,
                          rng=None) -> ObservationSet:
    """Received training samples for the given channels and codebook.

    ``channels`` is a list of N_bs channels (MultipathChannel or matrices) or
    an array ``(..., n_bs, n_r, n_t)``; leading axes are treated as
    independent trials.  Every slot draws a fresh CN(0, sigma_n2 I) vector
    at the UE array which each RF chain projects on its receive beam.
    """
    H = _channel_array(channels, cb)
    slot = slot_map(cb, n_rf)
    y = noiseless_observations(H, cb)
    if sigma_n2 > 0:
        if rng is None:
            rng = np.random.default_rng()
        y = y + observation_noise(cb, sigma_n2, rng, H.shape[:-3], n_rf)
    return ObservationSet(y, float(sigma_n2), slot, cb.n_rf if cb.grid is None else (n_rf or 1))


def observation_vector(obs) -> np.ndarray:
    """Stack the phases (phase 1 first) into the row order of the sensing matrix.

    Multi-phase stacks are scaled by ``1/sqrt(phases)`` to match the
    normalization folded into the differential sensing matrices, so that
    noiseless observations satisfy ``y = sqrt(rho) Psi g``.
    """
    y = obs.y if isinstance(obs, ObservationSet) else np.asarray(obs)
    phases = y.shape[-2]
    return y.reshape(*y.shape[:-2], -1) / np.sqrt(phases)


class SensingMatrix:
    """``Psi`` (dense or scipy sparse) with column map ``col = i*n_t*n_r + b*n_r + a``.

    Column ``(i, a, b)`` belongs to BS i and angular bin (a, b) of G_i, i.e.
    the column-major vectorization of each G_i.
    """

    def __init__(self, psi, n_bs, n_t, n_r, scheme=None):
        self.psi = psi
        self.n_bs, self.n_t, self.n_r = n_bs, n_t, n_r
        self.scheme = scheme
        if psi.shape[1] != n_bs * n_t * n_r:
            raise DimensionMismatchError("column count does not match n_bs*n_t*n_r")

    @property
    def shape(self):
        return self.psi.shape

    @property
    def is_sparse(self):
        return sp.issparse(self.psi)

    def col_map(self, col):
        """``(i, a, b)`` for a column index (array-friendly)."""
        i, rem = np.divmod(col, self.n_t * self.n_r)
        b, a = np.divmod(rem, self.n_r)
        return i, a, b

    def column(self, i, a, b):
        return (i * self.n_t + b) * self.n_r + a

    def dense(self):
        return self.psi.toarray() if self.is_sparse else np.asarray(self.psi)

    def adjoint_apply(self, y):
        """``Psi^* y`` for y of shape (M,) or (M, k)."""
        return self.psi.conj().T @ y

    def submatrix(self, cols):
        sub = self.psi[:, cols]
        return sub.toarray() if sp.issparse(sub) else np.asarray(sub)

    @cached_property
    def mu(self):
        return mutual_coherence(self)


def _dft_domain(cb: SchemeCodebook, tol=1e-12):
    """Beams in the DFT domain, ``F^* w``, with round-off below ``tol`` removed.

    Codebooks that carry their exact coefficients skip the transform.
    """
    if cb.r_coef is not None and cb.t_coef is not None:
        return cb.r_coef, cb.t_coef
    r = dft_matrix(cb.n_r).conj().T @ cb.w_r
    t = dft_matrix(cb.n_t).conj().T @ cb.w_t
    for arr in (r, t):
        arr.real[np.abs(arr.real) < tol] = 0
        arr.imag[np.abs(arr.imag) < tol] = 0
    return r, t


def sensing_matrix(cb: SchemeCodebook) -> SensingMatrix:
    """Assemble ``Psi = A Phi`` from the codebook.

    Row m of the block for BS i is ``pilot * (F_t^* w_t)^T kron (F_r^* w_r)^*``.
    Pilots are divided by sqrt(rho) so the entries carry only the pilot phase,
    and multi-phase schemes stack their phases with a ``1/sqrt(phases)`` factor.
    Beam-sweep family matrices are returned in sparse form.
    """
    r, t = _dft_domain(cb)
    phase = cb.pilots / np.sqrt(cb.rho) / np.sqrt(cb.phases)  # (phases, M, n_bs)
    if cb.scheme.sweep_family:
        # grid order q*P + p is the row order of kron(T^T, R^*)
        rx = sp.csr_array(r.conj().T)
        blocks = []
        for i in range(cb.n_bs):
            base = sp.csr_array(sp.kron(sp.csr_array(t[i].T), rx))
            blocks.append(sp.vstack([sp.diags_array(phase[k, :, i]) @ base for k in range(cb.phases)]))
        psi = sp.csc_array(sp.hstack(blocks))
        psi.eliminate_zeros()
        return SensingMatrix(psi, cb.n_bs, cb.n_t, cb.n_r, cb.scheme)
    psi = _dense_columns(cb, r, t, phase, None)
    return SensingMatrix(psi, cb.n_bs, cb.n_t, cb.n_r, cb.scheme)


def _dense_columns(cb, r, t, phase, cols):
    real = not (r.imag.any() or t.imag.any() or phase.imag.any())
    if real:
        r, t, phase = r.real, t.real, phase.real
    rows_r = r.conj()[:, cb.r_idx].T  # (M, n_r)
    M, width = cb.m, cb.n_t * cb.n_r
    dtype = float if real else complex
    if cols is None:
        psi = np.empty((cb.phases * M, cb.n_bs * width), dtype=dtype)
        for i in range(cb.n_bs):
            base = (t[i][:, cb.t_idx].T[:, :, None] * rows_r[:, None, :]).reshape(M, width)
            for k in range(cb.phases):
                np.multiply(phase[k, :, i, None], base, out=psi[k * M:(k + 1) * M, i * width:(i + 1) * width])
        return psi
    i, rem = np.divmod(np.asarray(cols), width)
    b, a = np.divmod(rem, cb.n_r)
    rows_t = t[:, :, cb.t_idx][i, b].T * rows_r[:, a]  # (M, len(cols))
    return np.vstack([phase[k][:, i] * rows_t for k in range(cb.phases)]).astype(dtype, copy=False)


def sensing_columns(cb: SchemeCodebook, cols) -> np.ndarray:
    """Dense columns ``cols`` of the sensing matrix without assembling the rest."""
    r, t = _dft_domain(cb)
    phase = cb.pilots / np.sqrt(cb.rho) / np.sqrt(cb.phases)
    return _dense_columns(cb, r, t, phase, cols)


def _lattice_form(a, max_int=64):
    """Write ``a = step * (re + j im)`` with small integers, if possible."""
    parts = [a.real, a.imag] if np.iscomplexobj(a) else [a]
    step = None
    for probe in (a[:, :1], a):  # cheap guess from one column, then the full matrix
        mags = np.abs(np.concatenate([probe.real.ravel(), probe.imag.ravel()]))
        nz = mags[mags > 1e-12]
        if nz.size == 0:
            continue
        step = nz.min()
        ints = [np.rint(x * (1 / step)) for x in parts]
        if all(np.abs(x * (1 / step) - n).max() <= 1e-9 for x, n in zip(parts, ints)):
            break
        step = None
    if step is None:
        return None
    re = ints[0].astype(np.float32)
    im = ints[1].astype(np.float32) if len(ints) > 1 else np.zeros_like(re)
    c = max(np.abs(re).max(), np.abs(im).max())
    m = a.shape[0]
    # |<x, y>|^2 <= (m max|x|^2)^2; the mixed product of the three-product
    # complex scheme is bounded by 4 m c^2.  Both must stay below 2^24.
    peak = float((re.astype(np.float64) ** 2 + im.astype(np.float64) ** 2).max())
    if c > max_int or (m * peak) ** 2 >= 2**24 or 4 * m * c * c >= 2**24:
        return None
    return step, re, im


def _coherence_sparse(psi):
    psi = sp.csc_array(psi)
    norms = np.sqrt(np.asarray(abs(psi).power(2).sum(axis=0)).ravel())
    if np.any(norms == 0):
        raise DegenerateMatrixError("sensing matrix has a zero column")
    pn = psi @ sp.diags_array(1 / norms)
    gram = sp.coo_array(pn.conj().T @ pn)
    off = gram.row != gram.col
    return float(np.abs(gram.data[off]).max()) if off.any() else 0.0


def _block_pairs(n, block):
    for s in range(0, n, block):
        for t in range(s, n, block):
            yield slice(s, min(s + block, n)), slice(t, min(t + block, n)), s == t


def _coherence_lattice(re, im, stop_above, block):
    """Equal-norm integer columns: every Gram entry is an exact float32 integer.

    Diagonal blocks use a symmetric rank-k update (upper triangle only).
    """
    re, im = np.asfortranarray(re), np.asfortranarray(im)
    real = not im.any()
    if not real:
        dif, tot = re - im, re + im
    norm2 = float((re[:, 0].astype(np.float64) ** 2 + im[:, 0].astype(np.float64) ** 2).sum())
    limit = None if stop_above is None else (stop_above * norm2) ** 2
    best = 0.0
    for cs, ct, diag in _block_pairs(re.shape[1], block):
        if diag:
            # syrk fills the upper triangle and leaves zeros below; the squared
            # imaginary part is symmetric, so the full max equals the upper max
            g2 = ssyrk(1.0, re[:, cs], trans=1)
            if not real:
                g2 += ssyrk(1.0, im[:, cs], trans=1)
            np.square(g2, out=g2)
            if not real:
                x = re[:, cs].T @ im[:, cs]
                x -= x.T.copy()
                g2 += np.square(x, out=x)
            np.fill_diagonal(g2, 0)
        elif real:
            g2 = re[:, cs].T @ re[:, ct]
            np.square(g2, out=g2)
        else:
            t1 = re[:, cs].T @ re[:, ct]
            t2 = im[:, cs].T @ im[:, ct]
            g2 = dif[:, cs].T @ tot[:, ct]
            g2 -= t1
            g2 += t2
            t1 += t2
            np.square(g2, out=g2)
            g2 += np.square(t1, out=t1)
        best = max(best, float(g2.max()))
        if limit is not None and best > limit:
            break
    return float(np.sqrt(best)) / norm2


def _coherence_dense(psi, stop_above, block):
    sq = (np.abs(psi) ** 2).sum(axis=0)
    if np.any(sq == 0):
        raise DegenerateMatrixError("sensing matrix has a zero column")
    pn = psi / np.sqrt(sq)
    best = 0.0
    for cs, ct, diag in _block_pairs(psi.shape[1], block):
        g = np.abs(pn[:, cs].conj().T @ pn[:, ct])
        if diag:
            np.fill_diagonal(g, 0)
        best = max(best, float(g.max()))
        if stop_above is not None and best > stop_above:
            break
    return best


def mutual_coherence(sm, *, block: int = 2048, stop_above: float | None = None) -> float:
    """Largest normalized inner product between distinct columns.

    Exact: every column pair is evaluated, in column blocks to bound memory.
    Equal-norm matrices whose entries lie on a scaled Gaussian-integer lattice
    (MUB and Rademacher designs) are evaluated with integer-exact float32
    products; others use double precision.  If ``stop_above`` is given,
    evaluation stops as soon as the running maximum exceeds it and that
    running value (a lower bound on the coherence) is returned.
    """
    psi = sm.psi if isinstance(sm, SensingMatrix) else sm
    if sp.issparse(psi):
        return _coherence_sparse(psi)
    psi = np.asarray(psi)
    order = None
    if isinstance(sm, SensingMatrix) and sm.n_r > 1 and stop_above is not None:
        # group columns by receive bin: the order is irrelevant to the result,
        # but pairs sharing a receive beam tend to carry the largest products,
        # so an early abort triggers in the first block
        order = np.argsort(np.arange(psi.shape[1]) % sm.n_r, kind="stable")
    if psi.shape[1] < 2:
        if psi.shape[1] and not np.any(psi):
            raise DegenerateMatrixError("sensing matrix has a zero column")
        return 0.0
    lattice = _lattice_form(psi)
    if lattice is not None:
        _, re, im = lattice
        sq = np.einsum("ij,ij->j", re, re, dtype=np.float64) + np.einsum("ij,ij->j", im, im, dtype=np.float64)
        if np.any(sq == 0):
            raise DegenerateMatrixError("sensing matrix has a zero column")
        if np.all(sq == sq[0]):
            if order is not None:
                re, im = re[:, order], im[:, order]
            return _coherence_lattice(re, im, stop_above, block)
    return _coherence_dense(psi if order is None else psi[:, order], stop_above, block)


def gram_magnitudes(sm) -> np.ndarray:
    """Full matrix of normalized column inner-product magnitudes (small problems)."""
    psi = sm.dense() if isinstance(sm, SensingMatrix) else np.asarray(sm)
    pn = psi / np.linalg.norm(psi, axis=0)
    return np.abs(pn.conj().T @ pn)


@dataclass(frozen=True)
class DrawSearch:
    mu: float
    draw: int
    draws_tried: int
    codebook: SchemeCodebook | None


def best_rbf_draw(n_t, n_r, u, n_bs, *, n_rf=1, draws=2000, target=None, seed=0, rho=1.0) -> DrawSearch:
    """Lowest-coherence RBF codebook among ``draws`` seeded realizations.

    Draw k uses ``default_rng([seed, k])``.  With ``target`` the search stops
    at the first draw whose coherence is ``<= target``; otherwise all draws
    are scanned.  Draws are abandoned as soon as they cannot win, which
    leaves the returned minimum unchanged.
    """
    from .codebook import rbf_codebook

    best = DrawSearch(np.inf, -1, 0, None)
    # every column of receive bin 0
    probe = np.arange(0, n_bs * n_t * n_r, n_r)
    for k in range(draws):
        cb = rbf_codebook(n_t, n_r, u, n_bs, rho=rho, rng=np.random.default_rng([seed, k]), n_rf=n_rf)
        cap = best.mu if target is None else min(best.mu, target)
        if np.isfinite(cap):
            # a column subset gives a lower bound; reject without full assembly
            if mutual_coherence(sensing_columns(cb, probe), stop_above=cap) > cap:
                best = DrawSearch(best.mu, best.draw, k + 1, best.codebook)
                continue
        mu = mutual_coherence(sensing_matrix(cb), stop_above=None if np.isinf(cap) else cap)
        if mu < best.mu and (np.isinf(cap) or mu <= cap):
            best = DrawSearch(mu, k, k + 1, cb)
            if target is not None and mu <= target:
                break
        best = DrawSearch(best.mu, best.draw, k + 1, best.codebook)
    return best


def support_mask(cb: SchemeCodebook, bins_per_bs) -> np.ndarray:
    """Boolean mask over the detector's index space marking true support.

    ``bins_per_bs[i]`` lists the (a, b) angular bins of BS i.  Sweep-family
    schemes index observations ``q*P + p`` (a bin block maps to the
    observation that sees it); compressive schemes index sensing columns.
    """
    if len(bins_per_bs) != cb.n_bs:
        raise DimensionMismatchError(f"need supports for {cb.n_bs} BSs, got {len(bins_per_bs)}")
    if cb.scheme.sweep_family:
        P, Q = cb.grid
        beta_r, beta_t = cb.n_r // P, cb.n_t // Q
        mask = np.zeros(P * Q, dtype=bool)
        for bins in bins_per_bs:
            for a, b in bins:
                mask[(b // beta_t) * P + a // beta_r] = True
        return mask
    mask = np.zeros(cb.n_bs * cb.n_t * cb.n_r, dtype=bool)
    for i, bins in enumerate(bins_per_bs):
        for a, b in bins:
            mask[(i * cb.n_t + b) * cb.n_r + a] = True
    return mask
