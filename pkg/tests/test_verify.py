import numpy as np
import pytest

from celldisc.errors import InvalidDimensionError
from celldisc.verify import (Check, Report, brute_force_pd, fig1_point, run_theorem_verification, table1,
                             theorem3_grid, tiny_instance)
from celldisc.analytics import pd_cs_exact


def test_check_kinds():
    assert Check("p", "a", 1.0, 1.05, 0.1).passed
    assert not Check("p", "a", 1.0, 1.2, 0.1).passed
    assert Check("p", "a", 1.0, 0.5, 0.1, "le").passed
    assert not Check("p", "a", 1.0, np.nan, 0.1).passed
    rep = Report([Check("p", "a", 1.0, 1.0, 0.0), Check("p", "b", 0.0, 1.0, 0.5)])
    assert not rep.passed and [c.name for c in rep.failures()] == ["b"]
    assert rep.to_csv().splitlines()[2].endswith("FAIL")


def test_deterministic_table_small():
    rep = table1(n_bs_values=(16,), rbf=False)
    assert rep.passed, rep.failures()
    assert len(rep.checks) == 4 + 4


def test_theorem3_grid_small():
    rep = theorem3_grid(n_t_values=(16,), u_values=(0, 1, 2))
    assert rep.passed, rep.failures()


def test_brute_force_agrees_on_orthogonal_support(rng):
    psi, d, rho, s2, tau = tiny_instance(rng, m=8, t=3, orthogonal=True)
    exact = pd_cs_exact(psi, d, rho, s2, tau)
    mc = brute_force_pd(psi, d, rho, s2, tau, 200_000, rng)
    assert abs(mc - exact) < 3 * np.sqrt(exact * (1 - exact) / 200_000)


def test_fig1_sweep_point_agrees():
    pd_an, rep, pf_an = fig1_point("bs_nbs2", -15, trials=4000)
    assert abs(rep.pd_mc - pd_an) <= 3 * np.sqrt(pd_an * (1 - pd_an) / 4000)
    assert abs(rep.pf_mc - pf_an) <= 3 * np.sqrt(pf_an * (1 - pf_an) / 4000)
    assert pf_an == pytest.approx(0.01)


def test_unknown_preset():
    with pytest.raises(InvalidDimensionError):
        run_theorem_verification("fig9")
