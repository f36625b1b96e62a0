import math
import os

import pytest

import fishermarket as fm


def test_oscillation():
    sc = fm.scenario("example1", {"lambda": 0.2}, seed=0)
    cfg = sc.config
    cfg.max_iters = 20
    tr = fm.run(sc.market, sc.p0, cfg)
    assert not tr.plateau_reached
    p = tr.prices
    assert max(abs(a - b) for a, b in zip(p[0], p[2])) <= 1e-12
    assert tr.to_csv().startswith("t,good,price_before,price_after,z,delta,clamped,F_after\n")


def test_cobb_douglas_equilibrium():
    m = fm.Market([fm.CesBuyer.cobb_douglas(3.0, [0.2, 0.8])], [1.0, 1.0], [0.1, 0.1])
    s = fm.solve_equilibrium(m)
    assert s.p_star == pytest.approx([0.6, 2.4], abs=1e-9)
    assert fm.excess_demand(m, s.p_star) == pytest.approx([0.0, 0.0], abs=1e-9)


def test_constants():
    assert fm.h_c(1.0, 0.5) == 0.125
    assert fm.big_C(2.0, 0.5) == pytest.approx(3 - 2 * math.sqrt(2), abs=1e-12)


def test_checks_and_file():
    path = os.path.join(os.environ.get("FISHER_DATA_DIR", "data"), "two_good_mixed.json")
    m = fm.load_market(path)
    cfg = fm.TatConfig()
    cfg.max_iters = 50
    tr = fm.run(m, [1.0, 0.5], cfg)
    reports = fm.run_checks(m, tr, cfg)
    assert reports
    assert all(r.status != "false" for r in reports)
    assert fm.report_csv(reports).startswith("check,t,good,lhs,rhs,slack,pass\n")


def test_bad_market():
    with pytest.raises(ValueError, match="rho must be < 1"):
        fm.parse_market('{"goods": [{}], "buyers": [{"budget": 1, "rho": 2, "coeffs": [1]}]}')
