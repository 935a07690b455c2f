"""Complete sets of mutually unbiased bases in prime-power dimensions.

Odd characteristic uses the Wootters-Fields quadratic phases
``w^tr(a x^2 + b x)``.  For d = 2^n the phases live in Z4: basis a has
vectors ``i^Q_a(x) (-1)^(b.x)`` where ``Q_a(x) = x^T S_a x (mod 4)`` is
evaluated over the integers and ``S_a[k, l] = tr(a e_k e_l)`` is the trace
form of GF(2^n) in the polynomial basis.  The matrices S_a form a Kerdock
set (pairwise differences are nonsingular mod 2), which is what makes the
bases unbiased.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import FamilySizeError, UnsupportedDimensionError
from .gf import MAX_ORDER, field, prime_power


@dataclass(frozen=True)
class MubFamily:
    dim: int
    bases: tuple  # d x d unitaries; columns are the basis vectors

    def __len__(self):
        return len(self.bases)

    def __getitem__(self, k):
        return self.bases[k]


def _binary_bases(n):
    gf = field(2, n)
    d = gf.order
    bits = (np.arange(d)[:, None] >> np.arange(n)) & 1  # (d, n)
    unit = 1 << np.arange(n)
    e_prod = gf.mul(unit[:, None], unit[None, :])  # e_k * e_l
    walsh = (-1.0) ** ((bits @ bits.T) % 2)  # (-1)^(x.b), indexed [x, b]
    out = []
    for a in range(d):
        S = gf.trace(gf.mul(a, e_prod))
        Q = np.einsum("xk,kl,xl->x", bits, S, bits) % 4
        out.append((1j ** Q)[:, None] * walsh / np.sqrt(d))
    return out


def _odd_bases(p, n):
    gf = field(p, n)
    d = gf.order
    x = np.arange(d)
    x2 = gf.mul(x, x)
    bx = gf.trace(gf.mul(x[:, None], x[None, :]))  # tr(b x), indexed [x, b]
    w = np.exp(2j * np.pi / p)
    out = []
    for a in range(d):
        phase = (gf.trace(gf.mul(a, x2))[:, None] + bx) % p
        out.append(w**phase / np.sqrt(d))
    return out


@lru_cache(maxsize=16)
def _full_family(d):
    if d == 1:
        return (np.ones((1, 1), dtype=complex),) * 2
    pn = prime_power(d)
    if pn is None:
        raise UnsupportedDimensionError(f"no MUB construction for d={d} (not a prime power)")
    if d > MAX_ORDER:
        raise UnsupportedDimensionError(f"d={d} exceeds the supported field size {MAX_ORDER}")
    p, n = pn
    rest = _binary_bases(n) if p == 2 else _odd_bases(p, n)
    bases = [np.eye(d, dtype=complex)] + [np.ascontiguousarray(b.astype(complex)) for b in rest]
    for b in bases:
        b.setflags(write=False)
    return tuple(bases)


def mub_family(d: int, count: int | None = None) -> MubFamily:
    """First ``count`` bases of the family ``[I, B_0, B_1, ..., B_{d-1}]``.

    B_0 is the Fourier-type member (the DFT for prime d, Walsh-Hadamard for
    d = 2^n).  Output is deterministic for fixed arguments.
    """
    if count is None:
        count = d + 1
    if count < 0 or count > d + 1:
        raise FamilySizeError(f"at most d+1={d + 1} mutually unbiased bases exist, asked for {count}")
    return MubFamily(d, _full_family(d)[:count])


def fourier_member(d: int) -> np.ndarray:
    return _full_family(d)[1]
