import numpy as np
import pytest
from hypothesis import given, strategies as st

from celldisc.analytics import (ProbabilityReport, draw_fixed_support, metric_covariance, monte_carlo_probe,
                                pd_cs_exact, pd_cs_lower_bound, pd_nonoverlap, pd_overlap_bound, pf_beam_sweep,
                                scheme_mu_closed_form)
from celldisc.codebook import build_codebook
from celldisc.detection import tau_for_pf
from celldisc.errors import InvalidDimensionError
from celldisc.measurement import sensing_matrix, support_mask
from celldisc.verify import _column_variances, tiny_instance

pos = st.floats(1e-3, 1e3)


def test_pf_oracle(oracles):
    for tau, s2, nt, nr, k, pf in oracles["pf_beam_sweep"]:
        assert pf_beam_sweep(tau, s2, nt, nr, k) == pytest.approx(pf, rel=1e-12)


def test_pd_oracle(oracles):
    for tau, s2, rho, var, pd in oracles["pd_nonoverlap"]:
        assert pd_nonoverlap(tau, s2, rho, var) == pytest.approx(pd, rel=1e-10)


def test_pf_inverts_threshold():
    tau = tau_for_pf(0.01, 1.0, 512 - 11)
    assert pf_beam_sweep(tau, 1.0, 64, 8, 11) == pytest.approx(0.01, rel=1e-12)
    assert pf_beam_sweep(tau, 1.0, 64, 8, 11, beta_t=2) < 0.01
    with pytest.raises(InvalidDimensionError):
        pf_beam_sweep(1.0, 1.0, 4, 2, 9)


def test_trivial_cases():
    assert pd_nonoverlap(1.0, 0.0, 1.0, [np.inf]) == 1.0
    assert pd_nonoverlap(0.0, 1.0, 1.0, [1.0]) == 1.0
    assert pf_beam_sweep(5.0, 1.0, 2, 2, 4) == 0.0
    lb = pd_cs_lower_bound(5, 0.3, 1.0, 1.0, 1.0, 2.0)
    assert lb.vacuous and lb.value == 0.0


def test_log_domain_product_no_underflow():
    # 10^5 tiny factors: naive product would underflow to 0
    assert pd_nonoverlap(1e-3, 1.0, 0.0, np.zeros(100_000)) == pytest.approx(1.0)
    assert 0 < pf_beam_sweep(30.0, 1.0, 1024, 256, 0) < 1e-6


@given(t1=st.floats(0, 50), t2=st.floats(0, 50), r1=pos, r2=pos, k=st.integers(1, 8), seed=st.integers(0, 2**31))
def test_probabilities_monotone(t1, t2, r1, r2, k, seed):
    var = np.random.default_rng(seed).uniform(0.1, 3, k)
    (ta, tb), (ra, rb) = sorted((t1, t2)), sorted((r1, r2))
    assert pd_nonoverlap(ta, 1.0, ra, var) >= pd_nonoverlap(tb, 1.0, ra, var) - 1e-15
    assert pd_nonoverlap(ta, 1.0, rb, var) >= pd_nonoverlap(ta, 1.0, ra, var) - 1e-15
    assert pf_beam_sweep(ta, 1.0, 8, 4, k) >= pf_beam_sweep(tb, 1.0, 8, 4, k) - 1e-15
    assert pd_overlap_bound(ta, 1.0, rb, var.max()) >= pd_overlap_bound(ta, 1.0, ra, var.max()) - 1e-15
    psi, d, _, _, _ = tiny_instance(np.random.default_rng(seed))
    assert pd_cs_exact(psi, d, ra, 1.0, ta) >= pd_cs_exact(psi, d, ra, 1.0, tb) - 1e-12
    assert pd_cs_exact(psi, d, rb, 1.0, ta) >= pd_cs_exact(psi, d, ra, 1.0, ta) - 1e-12
    for p in (pd_nonoverlap(ta, 1.0, ra, var), pd_cs_exact(psi, d, ra, 1.0, ta)):
        assert 0.0 <= p <= 1.0


@given(seed=st.integers(0, 2**31))
def test_lower_bound_below_exact(seed):
    psi, d, rho, s2, tau = tiny_instance(np.random.default_rng(seed))
    g = np.abs(psi.conj().T @ psi)
    np.fill_diagonal(g, 0)
    lb = pd_cs_lower_bound(psi.shape[1], g.max(), d.min(), rho, s2, tau)
    assert lb.value <= pd_cs_exact(psi, d, rho, s2, tau) + 1e-12


@given(seed=st.integers(0, 2**31), k=st.integers(1, 6))
def test_sweep_restriction_reduces_to_nonoverlap(seed, k):
    r = np.random.default_rng(seed)
    cb = build_codebook("bs", 8, 4, 2)
    sup = draw_fixed_support((k, max(1, 6 - k)), 4, 8, r)
    cols = np.flatnonzero(np.r_[support_mask(build_codebook("mubb", 8, 4, 2), sup.bins)])
    psi_t = sensing_matrix(cb).dense()[:, cols]
    var = _column_variances(sup, cols, 8, 4)
    tau, rho = r.uniform(0.5, 20), r.uniform(0.01, 5)
    assert pd_cs_exact(psi_t, var, rho, 1.0, tau) == pytest.approx(pd_nonoverlap(tau, 1.0, rho, var), abs=1e-12)


def test_metric_covariance_psd(rng):
    psi, d, rho, s2, _ = tiny_instance(rng, m=8, t=4)
    C = metric_covariance(psi, d, rho, s2)
    assert np.allclose(C, C.conj().T)
    assert np.linalg.eigvalsh(C).min() > -1e-12


def test_rank_deficient_support_warns():
    psi = np.ones((4, 2)) / 2
    with pytest.warns(RuntimeWarning):
        pd_cs_exact(psi, [1.0, 1.0], 1.0, 1.0, 2.0)


def test_closed_forms():
    assert scheme_mu_closed_form("mubb", n_t=256, u=1) == pytest.approx(0.0884, abs=1e-4)
    assert scheme_mu_closed_form("mubb", n_t=16, n_bs=1, u=0) == 0.0
    assert scheme_mu_closed_form("dbs", n_bs=16) == pytest.approx(0.9830, abs=1e-4)
    assert scheme_mu_closed_form("bc") == 1.0
    assert scheme_mu_closed_form("rbf") is None
    with pytest.raises(InvalidDimensionError):
        scheme_mu_closed_form("mubb")


def test_report_merge_and_errors():
    a, b = ProbabilityReport(100, 30, 5), ProbabilityReport(300, 90, 15)
    m = a.merge(b)
    assert (m.trials, m.pd_mc, m.pf_mc) == (400, 0.3, 0.05)
    assert m.pd_se == pytest.approx(np.sqrt(0.3 * 0.7 / 400))


def test_noiseless_probe_detects_everything(rng):
    sup = draw_fixed_support((2, 3), 4, 8, rng)
    cb = build_codebook("mubb", 8, 4, 2, rho=1.0)
    rep = monte_carlo_probe(cb, sup, 1.0, 0.0, 1e-9, 200, rng)
    assert rep.pd_mc == 1.0


def test_null_pf_matches_design(rng):
    # P_F = 0.1 at the inverted threshold, null channels, 3 sigma
    cb = build_codebook("bs", 16, 4, 1, rho=1.0)
    sup = draw_fixed_support((2,), 4, 16, rng)
    tau = tau_for_pf(0.1, 1.0, 64 - 2)
    rep = monte_carlo_probe(cb, sup, 1.0, 1.0, tau, 5000, rng, null_trials=True)
    pf = pf_beam_sweep(tau, 1.0, 16, 4, 2)
    assert abs(rep.pf_mc - pf) <= 3 * np.sqrt(pf * (1 - pf) / 5000)
    # off-support estimator on the same ideal channels agrees
    rep2 = monte_carlo_probe(cb, sup, 1.0, 1.0, tau, 5000, rng)
    assert abs(rep2.pf_mc - pf) <= 3 * np.sqrt(pf * (1 - pf) / 5000)
    with pytest.raises(InvalidDimensionError):
        monte_carlo_probe(cb, sup, 2.0, 1.0, tau, 500, rng)


def test_support_only_probe_matches_full_filter():
    sup = draw_fixed_support((2, 1), 4, 8, np.random.default_rng(5))
    cb = build_codebook("mubb", 8, 4, 2, rho=0.5)
    full = monte_carlo_probe(cb, sup, 0.5, 1.0, 3.0, 400, np.random.default_rng(9))
    part = monte_carlo_probe(cb, sup, 0.5, 1.0, 3.0, 400, np.random.default_rng(9), count_pf=False)
    assert part.pd_hits == full.pd_hits and part.pf_hits == 0


def test_inverted_threshold_null_rate_large_run():
    cb = build_codebook("bs", 16, 4, 1, rho=1.0)
    tau = tau_for_pf(0.1, 1.0, 64)
    rep = monte_carlo_probe(cb, draw_fixed_support((0,), 4, 16, np.random.default_rng(1)), 1.0, 1.0, tau,
                            100_000, np.random.default_rng(2), null_trials=True, batch=20_000)
    assert abs(rep.pf_mc - 0.1) <= 0.01
