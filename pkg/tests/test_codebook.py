import numpy as np
import pytest
from hypothesis import given, strategies as st

from celldisc.codebook import (Scheme, beam_combine_codebook, build_codebook, differential_pilots, mubb_capacity,
                               mubb_codebook, rbf_codebook)
from celldisc.errors import (CapacityExceededError, InvalidDimensionError, InvalidPartitionError,
                             UnsupportedDimensionError)

pow2 = st.sampled_from([2, 4, 8, 16])


@st.composite
def any_codebook(draw):
    scheme = draw(st.sampled_from(list(Scheme)))
    n_t = draw(st.sampled_from([4, 8, 16, 32]))
    n_r = draw(pow2)
    rho = draw(st.floats(0.1, 10.0))
    seed = draw(st.integers(0, 2**32 - 1))
    kw = dict(rho=rho, rng=np.random.default_rng(seed))
    if scheme in (Scheme.BEAM_COMBINE, Scheme.DIFF_BEAM_COMBINE):
        kw["beta_t"] = draw(st.sampled_from([b for b in (1, 2, 4) if n_t % b == 0]))
        kw["beta_r"] = draw(st.sampled_from([b for b in (1, 2) if n_r % b == 0]))
    if scheme in (Scheme.MUBB, Scheme.RBF):
        kw["u"] = draw(st.integers(0, 1))
    cap = mubb_capacity(n_t, kw.get("u", 0)) if scheme is Scheme.MUBB else 4
    n_bs = draw(st.integers(1, max(1, min(cap, 4))))
    if scheme is Scheme.RBF:
        kw["n_rf"] = draw(st.sampled_from([1, 2]))
    return build_codebook(scheme, n_t, n_r, n_bs, **kw)


@given(cb=any_codebook())
def test_power_budget_and_beam_norms(cb):
    # total training power of every BS equals n_t n_r
    for i in range(cb.n_bs):
        assert np.isclose(cb.tx_power(i), cb.n_t * cb.n_r, rtol=1e-8)
    assert np.allclose(np.linalg.norm(cb.w_r, axis=0), 1.0, atol=1e-10)
    assert np.allclose(np.abs(cb.pilots) ** 2, cb.rho, rtol=1e-12)
    # DFT-domain coefficients reproduce the beams
    from celldisc.channel import dft_matrix
    assert np.allclose(dft_matrix(cb.n_r) @ cb.r_coef, cb.w_r, atol=1e-12)
    assert np.allclose(dft_matrix(cb.n_t) @ cb.t_coef, cb.w_t, atol=1e-12)


@given(cb=any_codebook())
def test_receive_orthonormality(cb):
    if cb.scheme is Scheme.RBF:
        return
    G = cb.w_r.conj().T @ cb.w_r
    assert np.abs(G - np.eye(G.shape[0])).max() < 1e-10


def test_shapes_and_grid_order():
    cb = build_codebook("bc", 16, 4, 3, beta_t=2, beta_r=2)
    assert cb.grid == (2, 8)
    assert cb.m == 16 and cb.phases == 1
    assert list(cb.r_idx[:4]) == [0, 1, 0, 1] and list(cb.t_idx[:4]) == [0, 0, 1, 1]
    d = build_codebook("dbc", 16, 4, 3, beta_t=4)
    assert d.phases == 2 and d.m_total == 2 * 16
    assert d.label() == "dbc_bt4_br1"


def test_differential_pilots():
    p = differential_pilots(4)
    assert np.allclose(np.angle(p), 2 * np.pi * np.arange(1, 5) / 5 - 2 * np.pi * (np.arange(1, 5) > 2))
    cb = build_codebook("dbs", 4, 2, 4, rho=2.0)
    assert np.allclose(cb.pilots[1] / cb.pilots[0], p[None, :])


def test_mubb_examples():
    cb = mubb_codebook(16, 4, 1, 2)
    assert np.allclose(np.linalg.norm(cb.w_t, axis=1) ** 2, 2.0)
    assert cb.m == 4 * 8
    from celldisc.measurement import sensing_matrix
    psi = sensing_matrix(cb).dense()
    assert np.allclose(np.abs(psi), np.sqrt(2 / (16 * 4)))


def test_mubb_capacity_limits():
    assert mubb_capacity(256, 0) == 256
    assert mubb_capacity(256, 2) == 16
    with pytest.raises(CapacityExceededError):
        mubb_codebook(16, 4, 2, 2)
    with pytest.raises(UnsupportedDimensionError):
        mubb_codebook(12, 4, 0, 1)
    with pytest.raises(InvalidDimensionError):
        mubb_codebook(16, 4, 5, 1)


def test_rbf_examples(rng):
    cb = rbf_codebook(16, 4, 1, 3, rng=rng)
    assert cb.m == 32
    assert np.allclose(np.abs(cb.t_coef), np.sqrt(2 / 16))
    assert np.allclose(np.abs(cb.r_coef), 0.5)
    with pytest.raises(InvalidDimensionError):
        rbf_codebook(16, 4, 1, 3, m_obs=31)
    with pytest.raises(InvalidDimensionError):
        rbf_codebook(16, 4, 0, 1, n_rf=3)
    rf = rbf_codebook(16, 4, 0, 1, rng=rng, n_rf=4)
    assert list(rf.t_idx[:8]) == [0, 0, 0, 0, 1, 1, 1, 1]


def test_determinism():
    a = build_codebook("mubb", 64, 8, 4, u=1)
    b = build_codebook("mubb", 64, 8, 4, u=1)
    assert np.array_equal(a.w_t, b.w_t) and np.array_equal(a.w_r, b.w_r)
    r1 = build_codebook("rbf", 16, 4, 2, rng=np.random.default_rng(7))
    r2 = build_codebook("rbf", 16, 4, 2, rng=np.random.default_rng(7))
    assert np.array_equal(r1.w_t, r2.w_t)


def test_partition_errors():
    with pytest.raises(InvalidPartitionError):
        beam_combine_codebook(16, 4, 3, 1)
    with pytest.raises(InvalidDimensionError):
        build_codebook("bs", 0, 4, 1)


def test_scheme_parse():
    assert Scheme.parse("Beam-Sweep") is Scheme.BEAM_SWEEP
    assert Scheme.parse("MUB") is Scheme.MUBB
    with pytest.raises(ValueError):
        Scheme.parse("nope")
