import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from celldisc.errors import FamilySizeError, UnsupportedDimensionError
from celldisc.gf import GaloisField, field, prime_power
from celldisc.mub import fourier_member, mub_family

FIELDS = [(2, 1), (2, 2), (2, 3), (2, 4), (2, 6), (3, 1), (3, 2), (5, 1), (7, 1)]


def test_prime_power():
    assert prime_power(64) == (2, 6)
    assert prime_power(9) == (3, 2)
    assert prime_power(13) == (13, 1)
    assert prime_power(12) is None
    assert prime_power(1) is None


def test_bad_fields():
    with pytest.raises(ValueError):
        GaloisField(4)
    with pytest.raises(ValueError):
        GaloisField(2, 11)


@pytest.mark.parametrize("p,n", FIELDS)
def test_field_axioms_exhaustive(p, n):
    gf = field(p, n)
    q = gf.order
    x = np.arange(q)
    # additive group is Z_p^n
    assert (gf.add(x, gf.neg_table) == 0).all()
    assert (gf.add_table == gf.add_table.T).all()
    # every nonzero element has an inverse and multiplication is commutative
    assert (gf.mul_table == gf.mul_table.T).all()
    assert all((gf.mul_table[a, 1:] == 1).sum() == 1 for a in range(1, q))
    # distributivity on all triples
    a, b, c = np.meshgrid(x, x, x, indexing="ij")
    assert (gf.mul(a, gf.add(b, c)) == gf.add(gf.mul(a, b), gf.mul(a, c))).all()
    # Frobenius is additive and trace lands in the prime field
    assert (gf.power(gf.add(a[:, :, 0], b[:, :, 0]), p)
            == gf.add(gf.power(a[:, :, 0], p), gf.power(b[:, :, 0], p))).all()
    tr = gf.trace(x)
    assert tr.max() < p
    # trace is onto and balanced
    assert np.all(np.bincount(tr, minlength=p) == q // p)


def test_power_zero_and_one():
    gf = field(2, 4)
    assert (gf.power(np.arange(16), 0) == 1).all()
    assert (gf.power(np.arange(16), 1) == np.arange(16)).all()


@given(a=st.integers(0, 63), b=st.integers(0, 63), k=st.integers(0, 200))
def test_gf64_power_is_repeated_product(a, b, k):
    gf = field(2, 6)
    acc = 1
    for _ in range(k % 9):
        acc = gf.mul(acc, a)
    assert gf.power(a, k % 9) == acc
    assert gf.mul(gf.power(a, k), gf.power(b, k)) == gf.power(gf.mul(a, b), k)


def _check_family(fam, tol=1e-10):
    d = fam.dim
    for B in fam.bases:
        assert np.abs(B.conj().T @ B - np.eye(d)).max() < tol
    for B1, B2 in itertools.combinations(fam.bases, 2):
        assert np.abs(np.abs(B1.conj().T @ B2) - 1 / np.sqrt(d)).max() < tol


@pytest.mark.parametrize("d", [2, 3, 4, 5, 7, 8, 9, 16, 32, 64])
def test_complete_family_is_unbiased(d):
    fam = mub_family(d)
    assert len(fam) == d + 1
    _check_family(fam)


def test_partial_family_and_order():
    fam = mub_family(8, 3)
    assert len(fam) == 3
    assert np.array_equal(fam[0], np.eye(8))
    assert np.array_equal(fam[1], fourier_member(8))
    # the binary Fourier-type member is Walsh-Hadamard
    assert np.allclose(np.abs(fam[1]) * np.sqrt(8), 1.0)
    assert np.allclose(np.sqrt(8) * fam[1], np.real(np.sqrt(8) * fam[1]))


def test_prime_fourier_member_is_dft():
    from celldisc.channel import dft_matrix
    F = fourier_member(5)
    # same basis vectors as the DFT up to order and phase
    ov = np.abs(dft_matrix(5).conj().T @ F)
    assert np.allclose(np.sort(ov, axis=1)[:, -1], 1.0)


def test_deterministic():
    a, b = mub_family(16, 5), mub_family(16, 5)
    assert all(np.array_equal(x, y) for x, y in zip(a.bases, b.bases))


def test_errors():
    with pytest.raises(UnsupportedDimensionError):
        mub_family(6)
    with pytest.raises(FamilySizeError):
        mub_family(4, 6)
