import json
import math

import numpy as np
import pytest

from sobolev_growth.potential import (
    AnalyticPotential,
    CallablePotential,
    RandomRefreshPotential,
    TimeTerm,
    build_cutoff,
    cosine_potential,
    decay_audit,
    gap_model,
    load_potential,
    periodize,
    periodized_value,
    potential_to_json,
    three_mode_potential,
    truncate,
    truncation_rectangle,
    zero_potential,
)

PHI_AT_2 = {1.1: 0.8107150180480989, 1.5: 0.5663046036579912, 2.0: 0.5331542125960083}


def cos_cos(omega=0.7):
    """``2 cos x cos(omega t)``."""
    return AnalyticPotential({1: [TimeTerm(1.0, "cos", omega)]}, label="2cos(x)cos(wt)")


class TestCutoff:
    @pytest.mark.parametrize("alpha", sorted(PHI_AT_2))
    def test_shape(self, alpha):
        phi = build_cutoff(alpha)
        assert phi(0.0) == 1.0 and phi(1.0) == 1.0 and phi(-0.5) == 1.0
        assert phi(np.pi) == 0.0 and phi(-np.pi) == 0.0 and phi(4.0) == 0.0
        assert phi(2.0) == pytest.approx(PHI_AT_2[alpha], rel=1e-12)
        tau = np.linspace(-4, 4, 4001)
        values = phi(tau)
        assert np.all((values >= 0) & (values <= 1))
        # monotone on the transition
        right = values[(tau >= 1) & (tau <= np.pi)]
        assert np.all(np.diff(right) <= 1e-15)

    def test_scalar_shape(self):
        assert np.shape(build_cutoff(1.5)(2.0)) == ()

    @pytest.mark.parametrize("alpha", [1.0, 0.5])
    def test_analytic_rejected(self, alpha):
        with pytest.raises(ValueError, match="Gevrey"):
            build_cutoff(alpha)

    @pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
    def test_derivative_growth(self, alpha):
        phi = build_cutoff(alpha)
        maxima = phi.derivative_maxima(4)
        C = phi.gevrey_constants(4)
        assert maxima[0] == pytest.approx(1.0, abs=1e-6)
        assert np.all(np.isfinite(C)) and np.all(C > 0)
        m = np.arange(5)
        fact = np.array([math.factorial(i) for i in m], dtype=float)
        assert np.all(maxima <= (C.max() ** (m + 1)) * fact**alpha * (1 + 1e-12))


class TestAnalytic:
    def test_conjugates_filled_and_real(self):
        V = three_mode_potential()
        assert set(V.modes) == {-3, -2, -1, 1, 2, 3}
        x = np.linspace(-np.pi, np.pi, 101)
        g = V.evaluate_grid(x, np.linspace(-50, 50, 77))
        assert np.max(np.abs(g)) <= V.sup_bound * (1 + 1e-9)

    def test_non_real_rejected(self):
        with pytest.raises(ValueError, match="conjugate"):
            AnalyticPotential({1: [TimeTerm(1.0)], -1: [TimeTerm(2.0)]}, fill_conjugates=False)
        with pytest.raises(ValueError, match="partner"):
            AnalyticPotential({2: [TimeTerm(1.0)]}, fill_conjugates=False)

    def test_sin_terms(self):
        V = AnalyticPotential({0: [TimeTerm(1.0, "sin", 2.0, 0.3)]})
        assert V.evaluate(np.zeros(1), 0.4)[0] == pytest.approx(math.sin(1.1))

    def test_json_round_trip(self, tmp_path):
        V = three_mode_potential(0.2)
        path = tmp_path / "v.json"
        path.write_text(json.dumps(potential_to_json(V)))
        W = load_potential(path)
        x = np.linspace(-3, 3, 13)
        for t in (0.0, 1.3, -7.0):
            assert np.allclose(V.evaluate(x, t), W.evaluate(x, t), atol=1e-15)
        assert W.sup_bound == V.sup_bound

    def test_json_complex_amplitude(self):
        doc = {"schema": "sobolev-growth/potential", "version": 1, "modes": [{"k": 2, "terms": [{"amplitude": [0.0, 0.5]}]}]}
        V = load_potential(doc)
        assert V.evaluate(np.array([0.0]), 0.0)[0] == pytest.approx(0.0, abs=1e-15)
        assert V.evaluate(np.array([np.pi / 4]), 0.0)[0] == pytest.approx(-1.0)

    def test_json_bad_documents(self):
        with pytest.raises(ValueError):
            load_potential({"schema": "other", "modes": []})
        with pytest.raises(ValueError):
            load_potential({"version": 7, "modes": []})
        with pytest.raises(ValueError):
            load_potential({"modes": [{"k": 1, "terms": [{"amplitude": [1, 2, 3]}]}]})


class TestPeriodize:
    def test_zero(self):
        V1 = periodize(zero_potential(), 4.0, build_cutoff(1.5), 2, 40)
        assert not np.any(V1.table)

    def test_time_independent_identity(self):
        V = cosine_potential()
        phi = build_cutoff(2.0)
        T = 3.0
        V1 = periodize(V, T, phi, 2, 200, alias_tol=1e-6)
        # the j = +-1 rows are (x coefficient 1) times the periodized cutoff
        t = np.linspace(-np.pi * T, np.pi * T, 9)
        n = np.arange(-V1.n_max, V1.n_max + 1)
        row = V1.table[V1.j_max + 1] @ np.exp(1j * np.outer(n, t) / T)
        assert np.allclose(row, phi(t / T), atol=1e-6)
        x = np.linspace(-np.pi, np.pi, 31)
        for tt in np.linspace(-T, T, 11):
            assert np.allclose(V1.evaluate(x, tt), V.evaluate(x, tt), atol=1e-6)

    def test_identity_on_core_interval(self, rng):
        V = cos_cos(0.7)
        T = 4.0
        V1 = periodize(V, T, build_cutoff(2.0), 1, 400)
        x = rng.uniform(-np.pi, np.pi, 100)
        t = rng.uniform(-T, T, 100)
        err = max(abs(V1.evaluate(x[i : i + 1], t[i])[0] - V.evaluate(x[i : i + 1], t[i])[0]) for i in range(100))
        assert err <= 1e-8

    def test_matches_direct_sum(self, rng):
        V = three_mode_potential()
        T = 4.0
        phi = build_cutoff(2.0)
        V1 = periodize(V, T, phi, 3, 400)
        x = rng.uniform(-np.pi, np.pi, 20)
        for t in rng.uniform(-3 * np.pi * T, 3 * np.pi * T, 10):
            assert np.allclose(V1.evaluate(x, t), periodized_value(V, phi, T, x, t), atol=1e-8)

    def test_realness_and_sup(self):
        V = three_mode_potential()
        for T, alpha in ((4.0, 2.0), (16.0, 1.5)):
            V1 = periodize(V, T, build_cutoff(alpha), 3, 600)
            assert V1.hermitian_defect() <= 1e-13
            x = np.linspace(-np.pi, np.pi, 64, endpoint=False)
            t = np.linspace(-np.pi * T, np.pi * T, 257)
            sup1 = np.max(np.abs(V1.evaluate_grid(x, t)))
            sup0 = np.max(np.abs(V.evaluate_grid(x, np.linspace(-3 * np.pi * T, 3 * np.pi * T, 2001))))
            assert sup1 <= 2 * sup0 + 1e-9

    def test_callable_path_agrees(self):
        V = cos_cos(0.5)
        W = CallablePotential(lambda x, t: 2 * np.cos(x) * np.cos(0.5 * t), x_band=1, sup_bound=2.0)
        phi = build_cutoff(2.0)
        a = periodize(V, 3.0, phi, 2, 200, alias_tol=1e-6)
        b = periodize(W, 3.0, phi, 2, 200, alias_tol=1e-6)
        assert np.max(np.abs(a.table - b.table)) < 1e-12
        assert not b.structural
        with pytest.raises(TypeError):
            decay_audit(b, 2.0, 0.5)

    def test_aliasing_rejected(self):
        with pytest.raises(ValueError, match="aliasing"):
            periodize(cos_cos(), 3.0, build_cutoff(1.1), 1, 40)
        with pytest.raises(ValueError, match="aliasing"):
            periodize(three_mode_potential(), 3.0, build_cutoff(2.0), 2, 200)

    def test_small_T_rejected(self):
        with pytest.raises(ValueError):
            periodize(cos_cos(), 1.5, build_cutoff(2.0), 1, 40)


class TestTruncate:
    def test_rectangle(self):
        assert truncation_rectangle(16.0, 3.0) == (22, 342)
        assert truncation_rectangle(16.0, 2.5) == (13, 205)

    def test_inside_rectangle_gap_zero(self):
        V1 = periodize(cos_cos(), 16.0, build_cutoff(1.5), 13, 405)
        V1 = type(V1)(np.where(np.abs(np.arange(-405, 406)) <= 205, V1.table, 0), V1.T, V1.parent, V1.cutoff)
        V2 = truncate(V1, 2.5, 0.5)
        assert V2.sup_gap == 0.0
        assert V2.table.shape == (27, 411)
        inner = V1.table[13 - 13 : 13 + 14, 405 - 205 : 405 + 206]
        assert np.array_equal(V2.table, inner)

    def test_single_removed_mode(self):
        V1 = periodize(zero_potential(), 16.0, build_cutoff(1.5), 14, 250)
        table = np.array(V1.table)
        a = 0.3
        table[14 + 14, 250 + 3] = a / 2
        table[14 - 14, 250 - 3] = a / 2
        V1 = type(V1)(table, 16.0, V1.parent, V1.cutoff)
        V2 = truncate(V1, 2.5, 0.5)
        assert 0 < V2.sup_gap <= 2 * a
        assert not np.any(V2.table)

    def test_desk_gap_below_model(self):
        V1 = periodize(three_mode_potential(), 16.0, build_cutoff(1.5), 13, 405)
        V2 = truncate(V1, 2.5, 0.5)
        model = gap_model(16.0, 2.2, 1.5)
        assert V2.sup_gap <= model
        assert V2.sup_gap < 1e-10  # regression anchor: the analytic data leave almost nothing outside

    def test_support_exact(self):
        V1 = periodize(three_mode_potential(), 16.0, build_cutoff(1.5), 13, 405)
        V2 = truncate(V1, 2.5, 0.5)
        assert (V2.K_x, V2.K_t) == (13, 205)
        assert V2.table.shape == (2 * 13 + 1, 2 * 205 + 1)

    def test_rejections(self):
        V1 = periodize(cos_cos(), 16.0, build_cutoff(1.5), 2, 300)
        with pytest.raises(ValueError, match="exceeds the stored table"):
            truncate(V1, 2.5, 0.5)
        with pytest.raises(ValueError, match="ordering"):
            truncate(V1, 1.8, 0.5)


class TestDecay:
    def test_zero(self):
        rep = decay_audit(periodize(zero_potential(), 8.0, build_cutoff(1.5), 2, 100), 1.5, 0.5)
        assert rep.passed
        assert rep.C_x == 0.0 and rep.C_n == 0.0

    def test_single_band_x(self):
        rep = decay_audit(periodize(cos_cos(), 16.0, build_cutoff(1.5), 4, 400), 1.5, 0.5)
        # only |j| = 1 is occupied, which sits below the threshold (log T)^delta
        assert rep.points_x == 0 and rep.C_x == 0.0
        assert rep.passed

    def test_alpha_comparison(self):
        reports = {}
        for alpha in (1.5, 2.0):
            V1 = periodize(three_mode_potential(), 16.0, build_cutoff(alpha), 3, 600)
            reports[alpha] = decay_audit(V1, alpha, 0.5)
            assert reports[alpha].passed
        assert reports[2.0].c_n < reports[1.5].c_n


class TestRandomRefresh:
    def test_reproducible_and_real(self):
        a, b = RandomRefreshPotential(3), RandomRefreshPotential(3)
        for t in (0.2, 5.5, 123.9):
            ca, cb = a.xcoeffs(t, 4), b.xcoeffs(t, 4)
            assert np.array_equal(ca, cb)
            assert np.allclose(ca[::-1], np.conj(ca))
        assert not np.array_equal(RandomRefreshPotential(4).xcoeffs(5.5, 4), a.xcoeffs(5.5, 4))

    def test_bounded_and_continuous(self):
        V = RandomRefreshPotential(0)
        x = np.linspace(-np.pi, np.pi, 50)
        t = np.linspace(0, 6, 6001)
        vals = np.array([V.evaluate(x, tt) for tt in t])
        assert np.max(np.abs(vals)) <= V.sup_bound + 1e-12
        assert np.max(np.abs(np.diff(vals, axis=0))) < 0.05
