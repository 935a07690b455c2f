"""Arithmetic in GF(p^n) via log/antilog tables.

Elements are integers in ``range(p**n)``; the base-p digits of an element
are the coefficients of its polynomial representative (digit k multiplies
x^k).  Fields are small (the MUB constructions need at most a few thousand
elements), so everything is table driven.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

# Fixed primitive polynomials over GF(2), listed as exponents of the nonzero
# terms.  The concrete MUB family produced for d = 2^n depends on this table.
BINARY_PRIMITIVE_POLYS = {
    1: (1, 0),
    2: (2, 1, 0),
    3: (3, 1, 0),
    4: (4, 1, 0),
    5: (5, 2, 0),
    6: (6, 1, 0),
    7: (7, 1, 0),
    8: (8, 4, 3, 2, 0),
    9: (9, 4, 0),
    10: (10, 3, 0),
    11: (11, 2, 0),
    12: (12, 6, 4, 1, 0),
}

MAX_ORDER = 1 << 10


def prime_power(d: int) -> tuple[int, int] | None:
    """Return ``(p, n)`` with ``d == p**n`` and p prime, else None (d=1 -> None)."""
    if d < 2:
        return None
    p = next((k for k in range(2, int(d**0.5) + 1) if d % k == 0), d)
    n = 0
    while d % p == 0:
        d //= p
        n += 1
    return (p, n) if d == 1 else None


def _poly_coeffs(p, n, exps):
    c = [0] * (n + 1)
    for e in exps:
        c[e] = 1
    return c


def _mulx_table(p, n, modulus):
    """Return a function multiplying a digit vector by x modulo ``modulus``.

    ``modulus`` holds n+1 coefficients, low degree first, monic.
    """
    low = np.array(modulus[:n], dtype=np.int64)

    def mulx(v):
        top = v[n - 1]
        out = np.empty_like(v)
        out[1:] = v[:-1]
        out[0] = 0
        return (out - top * low) % p

    return mulx


def _find_primitive(p, n):
    # lexicographically smallest monic primitive polynomial; deterministic
    q = p**n
    for tail in range(p**n):
        coeffs = [(tail // p**k) % p for k in range(n)] + [1]
        if coeffs[0] == 0:
            continue
        if _order_of_x(p, n, coeffs) == q - 1:
            return coeffs
    raise RuntimeError(f"no primitive polynomial found for GF({p}^{n})")


def _order_of_x(p, n, coeffs):
    q = p**n
    mulx = _mulx_table(p, n, coeffs)
    one = np.zeros(n, dtype=np.int64)
    one[0] = 1
    v = one.copy()
    for k in range(1, q):
        v = mulx(v)
        if np.array_equal(v, one):
            return k
        if not v.any():
            return 0
    return 0


class GaloisField:
    """The field GF(p^n) with x as primitive element."""

    def __init__(self, p: int, n: int = 1):
        if prime_power(p) != (p, 1):
            raise ValueError(f"characteristic {p} is not prime")
        if n < 1 or p**n > MAX_ORDER:
            raise ValueError(f"GF({p}^{n}) outside the supported range")
        self.p, self.n, self.order = p, n, p**n
        if n == 1:
            self.modulus = [0, 1]  # unused; elements are plain residues
        elif p == 2 and n in BINARY_PRIMITIVE_POLYS:
            self.modulus = _poly_coeffs(p, n, BINARY_PRIMITIVE_POLYS[n])
        else:
            self.modulus = _find_primitive(p, n)
        self._build_tables()

    def __repr__(self):
        return f"GaloisField(p={self.p}, n={self.n})"

    def _build_tables(self):
        p, n, q = self.p, self.n, self.order
        weights = p ** np.arange(n)
        exp = np.zeros(q - 1, dtype=np.int64)
        if n == 1:
            g = next(g for g in range(1, p) if _residue_order(g, p) == p - 1) if p > 2 else 1
            acc = 1
            for k in range(q - 1):
                exp[k] = acc
                acc = acc * g % p
        else:
            mulx = _mulx_table(p, n, self.modulus)
            v = np.zeros(n, dtype=np.int64)
            v[0] = 1
            for k in range(q - 1):
                exp[k] = int(v @ weights)
                v = mulx(v)
        log = np.full(q, -1, dtype=np.int64)
        log[exp] = np.arange(q - 1)
        if (log[1:] < 0).any():
            raise RuntimeError("modulus is not primitive")
        self.exp, self.log = exp, log
        digits = (np.arange(q)[:, None] // weights) % p
        self.digits = digits
        self.add_table = ((digits[:, None, :] + digits[None, :, :]) % p) @ weights
        self.neg_table = ((-digits) % p) @ weights
        a, b = np.meshgrid(np.arange(q), np.arange(q), indexing="ij")
        nz = (a > 0) & (b > 0)
        mul = np.zeros((q, q), dtype=np.int64)
        mul[nz] = exp[(log[a[nz]] + log[b[nz]]) % (q - 1)]
        self.mul_table = mul

    def add(self, a, b):
        return self.add_table[a, b]

    def mul(self, a, b):
        return self.mul_table[a, b]

    def power(self, a, k: int):
        a = np.asarray(a)
        out = np.where(a == 0, 0, self.exp[(self.log[np.maximum(a, 1)] * k) % (self.order - 1)])
        if k == 0:
            out = np.ones_like(out)
        return out

    def trace(self, a):
        """Absolute trace to the prime subfield, returned as an int in [0, p)."""
        a = np.asarray(a)
        acc = np.zeros_like(a)
        y = a
        for _ in range(self.n):
            acc = self.add_table[acc, y]
            y = self.power(y, self.p)
        if (acc >= self.p).any():
            raise RuntimeError("trace left the prime subfield")
        return acc


def _residue_order(g, p):
    acc, k = g % p, 1
    while acc != 1:
        acc = acc * g % p
        k += 1
    return k


@lru_cache(maxsize=None)
def field(p: int, n: int = 1) -> GaloisField:
    return GaloisField(p, n)
