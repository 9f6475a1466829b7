import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from stochreal import expressivity as ex
from stochreal import model as md
from stochreal import realization as rl
from stochreal import stochastic as sr
from stochreal.errors import DegenerateR, NotPositiveReal
from stochreal.model import CovarianceSeries
from stochreal.realization import RealizationTriplet

P1_EXAMPLE = 0.09415780150964781
P2_EXAMPLE = 0.9558421984903522


def scalar_series(F, HN, r0=1.0, K=40):
    return CovarianceSeries(r0, HN * F ** np.arange(K))


def assert_witness(verdict, series, family):
    w = verdict.witness
    got = md.analytic_covariance(w, series.K)
    assert abs(got.r0 - series.r0) < 1e-8
    assert np.abs(got.lags - series.lags).max() < 1e-8
    assert md.family_violations(w, family, tol=0.0) == []


# gum_from_realization

def test_gum_from_realization_hmc_point(scalar_example):
    g = ex.gum_from_realization(*scalar_example, 0.6)
    assert g.c[0, 0] == pytest.approx(0.0, abs=1e-15)
    assert (g.a[0, 0], g.b[0, 0], g.beta, g.alpha[0, 0], g.eta[0, 0]) == pytest.approx(
        (0.5, 1.0, 0.4, 0.45, 0.6))


def test_gum_from_realization_pmin_is_dgum(scalar_example):
    g = ex.gum_from_realization(*scalar_example, P1_EXAMPLE)
    assert abs(g.alpha[0, 0]) < 1e-12


def test_gum_from_realization_degenerate_r():
    # HN = r0 F: P2 = r0 / H^2 gives R = 0
    t = RealizationTriplet(1.0, 0.5, 0.5)
    P1, P2 = sr.scalar_interval(1.0, 0.5, 0.5, 1.0)
    with pytest.raises(DegenerateR):
        ex.gum_from_realization(t, 1.0, P2)


@given(st.integers(0, 10_000))
def test_gum_from_realization_round_trip(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    p = md.random_gum(rng, n)
    t = RealizationTriplet.from_params(p)
    s = md.analytic_covariance(p, 20)
    P_min, P_max = sr.compute_extremal_P(t, p.r0)
    lam = rng.uniform(0.05, 0.95)
    g = ex.gum_from_realization(t, p.r0, lam * P_min + (1 - lam) * P_max)
    assert md.is_stationary(g)
    got = md.analytic_covariance(g, 20)
    assert abs(got.r0 - s.r0) < 1e-8 and np.abs(got.lags - s.lags).max() < 1e-8


# hmc_feasible

def test_hmc_scalar_example(scalar_example):
    v = ex.hmc_feasible(*scalar_example)
    assert v.realizable is True
    assert v.certificate["P"][0, 0] == pytest.approx(0.6)


def test_hmc_scalar_refuted_above_diagonal():
    v = ex.hmc_feasible(RealizationTriplet(1.0, 0.5, 0.7), 1.0)
    assert v.realizable is False


def test_hmc_random_round_trip(rng):
    p = md.random_gum(rng, 2, "HMC")
    s = md.analytic_covariance(p, 40)
    t = rl.ho_kalman(s)
    v = ex.hmc_feasible(t, s.r0)
    assert v.realizable is True
    assert_witness(v, s, "HMC")
    # the model's own eta, carried to the Ho-Kalman basis, is admissible too
    T = rl.find_isomorphism(RealizationTriplet.from_params(p), t)
    assert sr.is_feasible(t, s.r0, T @ p.eta @ T.T)
    assert np.abs(t.F @ T @ p.eta @ T.T @ t.H.T - t.N).max() < 1e-10


def test_hmc_screen_span():
    # F singular with N outside its range
    t = RealizationTriplet([[1.0, 1.0]], np.diag([0.5, 0.0]), [[0.1], [0.2]])
    assert "span" in ex.hmc_feasible(t, 2.0).reason


def test_hmc_screen_sign():
    t = RealizationTriplet([[1.0, 0.0]], np.diag([0.5, -0.4]), [[-0.1], [0.3]])
    v = ex.hmc_feasible(t, 5.0)
    assert v.realizable is False


@pytest.mark.parametrize("F", [0.3, 0.6, 0.9, -0.3, -0.6, -0.9])
def test_hmc_scalar_boundary_sweep(F):
    # P = N/(HF) lies in [P1, P2] iff HN is between 0 and r0 F
    r0 = 1.0
    for HN in np.linspace(-1, 1, 81):
        iv = sr.scalar_interval(1.0, F, HN, r0)
        if iv is None or min(abs(HN), abs(HN - r0 * F)) < 1e-9:
            continue
        v = ex.hmc_feasible(RealizationTriplet(1.0, F, HN), r0)
        assert v.realizable == oracles.cartography_closed_form(F, HN, r0)["hmc"]


# dgum_feasible

def test_dgum_scalar_example(scalar_example):
    cands = ex.dgum_feasible(*scalar_example)
    vals = sorted(c[0, 0] for c in cands)
    assert vals == pytest.approx([P1_EXAMPLE, P2_EXAMPLE], abs=1e-12)
    for c in cands:
        assert abs(-c[0, 0] ** 2 + 1.05 * c[0, 0] - 0.09) < 1e-14


def test_dgum_nonempty_for_positive_real(rng):
    for n in (2, 3):
        p = md.random_gum(rng, n, "DGUM")
        t = RealizationTriplet.from_params(p)
        cands = ex.dgum_feasible(t, p.r0)
        assert cands
        for c in cands:
            assert np.abs(sr.riccati_residual(t, p.r0, c)).max() < 1e-9


def test_dgum_white_noise():
    assert ex.dgum_feasible(RealizationTriplet.empty(), 1.0)[0].shape == (0, 0)


def test_dgum_not_positive_real():
    with pytest.raises(NotPositiveReal):
        ex.dgum_feasible(RealizationTriplet(1.0, 0.5, 0.9), 1.0)


# rnn_feasible

def test_rnn_curve_one():
    v = ex.rnn_feasible(RealizationTriplet(1.0, 0.5, 0.5), 1.0)
    assert v.realizable is True
    assert md.family_violations(v.witness, "RNN", tol=0.0) == []


def test_rnn_curve_two():
    assert ex.rnn_feasible(RealizationTriplet(1.0, 0.5, -0.25), 1.0).realizable is True


def test_rnn_refuted_for_n2(rng):
    t = RealizationTriplet.from_params(md.random_gum(rng, 2))
    v = ex.rnn_feasible(t, 1.0)
    assert v.realizable is False and "rank-1 constraint" in v.reason


def test_rnn_refuted_off_curves(scalar_example):
    assert ex.rnn_feasible(*scalar_example).realizable is False


@given(st.floats(-0.95, 0.95).filter(lambda f: abs(f) > 0.02), st.floats(0.5, 2.0))
def test_rnn_curves_property(F, r0):
    c1 = ex.rnn_feasible(RealizationTriplet(1.0, F, r0 * F), r0)
    assert c1.realizable is True
    HN2 = r0 * F * (2 * F * F - 1)
    if sr.scalar_interval(1.0, F, HN2, r0) is not None:
        assert ex.rnn_feasible(RealizationTriplet(1.0, F, HN2), r0).realizable is True
    off = ex.rnn_feasible(RealizationTriplet(1.0, F, 0.5 * r0 * F), r0)
    assert off.realizable is False


# classify

def test_classify_white_noise():
    r = ex.classify(CovarianceSeries(1.0, np.zeros(20)))
    assert r.factorizable and r.order == 0
    assert all(v is True for v in r.verdicts().values())


def test_classify_scalar_example():
    r = ex.classify(scalar_series(0.5, 0.3))
    assert r.order == 1 and r.is_covariance
    assert r.verdicts() == {"GUM": True, "HMC": True, "DGUM": True, "RNN": False}
    s = scalar_series(0.5, 0.3)
    assert_witness(r.gum, s, "GUM")
    assert_witness(r.hmc, s, "HMC")
    assert_witness(r.dgum, s, "DGUM")


def test_classify_not_covariance():
    s = CovarianceSeries(1.0, 1.5 * 0.5 ** np.arange(30))
    assert not s.cauchy_schwarz_ok()
    assert not sr.toeplitz_is_covariance(s, 1)
    r = ex.classify(s)
    assert r.factorizable and r.is_covariance is False
    assert all(v is False for v in r.verdicts().values())


def test_classify_too_few_lags():
    r = ex.classify(CovarianceSeries(1.0, [0.1, 0.05]))
    assert r.factorizable is None and r.gum.realizable is None


def test_classify_not_factorizable(rng):
    s = CovarianceSeries(1.0, 0.3 / np.arange(1, 21) ** 2)
    r = ex.classify(s)
    assert r.factorizable is False and r.gum.realizable is None


def test_classify_rnn_witness(rng):
    p = md.random_gum(rng, 1, "RNN")
    s = md.analytic_covariance(p, 40)
    r = ex.classify(s)
    assert r.rnn.realizable is True
    assert_witness(r.rnn, s, "RNN")


@given(st.integers(0, 10_000))
def test_classify_nesting_and_witnesses(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    fam = ["GUM", "HMC", "DGUM"][seed % 3]
    s = md.analytic_covariance(md.random_gum(rng, n, fam), 40)
    r = ex.classify(s)
    v = r.verdicts()
    assert r.order == n and v["GUM"] is True
    if v["RNN"]:
        assert v["DGUM"] and r.order == 1
    if v["HMC"] or v["DGUM"]:
        assert v["GUM"] and r.is_covariance
    for key, verdict in (("GUM", r.gum), ("HMC", r.hmc), ("DGUM", r.dgum), ("RNN", r.rnn)):
        if verdict.realizable:
            assert_witness(verdict, s, key)
    if fam != "GUM":
        assert v[fam] is True


def test_classify_similarity_invariance(rng):
    p = md.random_gum(rng, 2, "HMC")
    t = RealizationTriplet.from_params(p)
    T = rng.standard_normal((2, 2)) + 2 * np.eye(2)
    u = rl.similarity_transform(t, T)
    a = ex.classify(rl.reconstruct_series(t, p.r0, 40)).verdicts()
    b = ex.classify(rl.reconstruct_series(u, p.r0, 40)).verdicts()
    assert a == b
    # the per-family tests give the same verdicts on either triplet
    assert ex.hmc_feasible(t, p.r0).realizable == ex.hmc_feasible(u, p.r0).realizable
    assert ex.rnn_feasible(t, p.r0).realizable == ex.rnn_feasible(u, p.r0).realizable


def test_classify_batch_matches_single(rng):
    series = [scalar_series(F, HN) for F, HN in [(0.5, 0.3), (0.5, 0.5), (-0.4, 0.2), (0.2, 0.9)]]
    series.append(md.analytic_covariance(md.random_gum(rng, 2), 40))
    batch = ex.classify_batch(series)
    for s, r in zip(series, batch):
        assert ex.classify(s).verdicts() == r.verdicts()


# cartography

def test_closed_form_labels_f_zero_column():
    HN = np.linspace(-0.9, 0.9, 19)
    lab = ex.closed_form_labels(np.zeros_like(HN), HN, 1.0)
    assert not lab["hmc"].any()
    c1, c2 = ex.rnn_curves(0.0, 1.0)
    assert c1 == 0.0 and c2 == 0.0


def test_closed_form_labels_corner():
    lab = ex.closed_form_labels(1.0, 1.0, 1.0)
    assert lab["covariance"] == "boundary"


def test_closed_form_labels_against_oracle():
    rng = np.random.default_rng(3)
    for F, HN in rng.uniform(-1, 1, (500, 2)):
        lab = ex.closed_form_labels(F, HN, 1.0)
        ref = oracles.cartography_closed_form(F, HN, 1.0)
        assert bool(lab["gum"]) == ref["covariance"]
        assert bool(lab["hmc"]) == ref["hmc"]
        assert float(lab["rnn_curve1_dist"]) == pytest.approx(ref["d1"])
        assert float(lab["rnn_curve2_dist"]) == pytest.approx(ref["d2"])


def test_cartography_small_grid():
    g = ex.scalar_cartography(1.0, 21)
    assert g.shape == (21, 21)
    assert g.mismatches == []
    # F = 0 column (index 10): HMC region empty
    assert not g.closed["hmc"][10].any() and not g.pipeline["hmc"][10][~g.boundary[10]].any()


def test_cartography_other_r0():
    g = ex.scalar_cartography(2.5, 15)
    assert g.mismatches == []
    assert g.HN_axis.max() < 2.5


def test_cartography_rejects_tiny_grid():
    with pytest.raises(ValueError):
        ex.scalar_cartography(1.0, 2)
