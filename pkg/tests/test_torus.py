import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import hs_norm_quadrature
from sobolev_growth.torus import (
    SpaceTimeField,
    TorusField,
    apply_multiplier,
    coeffs_to_grid,
    dyadic_scales,
    dyadic_slice,
    embed_initial,
    grid_points,
    hs_norm,
    multiplier_profile,
)


def single(j, j_max=10, value=1.0):
    return TorusField.from_modes({j: value}, j_max)


class TestNorms:
    def test_single_mode(self):
        assert hs_norm(single(1), 0) == 1.0
        assert hs_norm(single(1), 1) == pytest.approx(math.sqrt(2), rel=1e-15)

    def test_symmetric_pair_s2(self):
        u = TorusField.from_modes({3: 1, -3: 1}, 5)
        assert hs_norm(u, 2) == pytest.approx(math.sqrt(200), rel=1e-14)
        # the represented function is 2 cos 3x
        assert hs_norm_quadrature(lambda x: 2 * np.cos(3 * x), 2) == pytest.approx(math.sqrt(200), rel=1e-12)

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            hs_norm(single(0), -1)

    @pytest.mark.parametrize("s", [0, 1, 2, 3])
    def test_matches_quadrature(self, rng, s):
        u = TorusField.random(12, rng, decay=1.0)
        assert hs_norm(u, s) == pytest.approx(hs_norm_quadrature(lambda x: coeffs_to_grid_at(u, x), s), rel=1e-10)

    def test_parseval_grid(self, rng):
        for _ in range(20):
            u = TorusField.random(int(rng.integers(0, 40)), rng)
            rms = math.sqrt(np.mean(np.abs(u.to_grid()) ** 2))
            assert hs_norm(u, 0) == pytest.approx(rms, rel=1e-12)


def coeffs_to_grid_at(u, x):
    return np.exp(1j * np.outer(x, u.frequencies)) @ u.coeffs


class TestField:
    def test_grid_round_trip(self, rng):
        u = TorusField.random(17, rng)
        back = TorusField.from_grid(u.to_grid())
        assert np.max(np.abs(back.coeffs - u.coeffs)) < 1e-13

    def test_grid_orientation(self):
        # coefficient of exp(2ix) evaluates to exp(2ix) at the collocation points
        x = grid_points(6)
        assert np.allclose(single(2, 6).to_grid(), np.exp(2j * x), atol=1e-14)

    def test_from_function(self):
        u = TorusField.from_function(lambda x: 1 + 2 * np.cos(x), 4)
        assert u.coefficient(0) == pytest.approx(1)
        assert u.coefficient(1) == pytest.approx(1)
        assert u.coefficient(-1) == pytest.approx(1)
        assert u.is_real()

    def test_real_part_is_real(self, rng):
        u = TorusField.random(9, rng, real=True)
        assert u.is_real(0.0)
        assert np.max(np.abs(u.to_grid().imag)) < 1e-13

    def test_immutable(self):
        u = single(1)
        with pytest.raises(ValueError):
            u.coeffs[0] = 3

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            TorusField(np.zeros(4), 2)
        with pytest.raises(ValueError):
            TorusField.from_modes({5: 1}, 3)

    def test_band_change(self):
        u = TorusField.from_modes({1: 1, 4: 2}, 4)
        assert u.with_band(8).coefficient(4) == 2
        assert u.with_band(2).coefficient(4) == 0
        assert u.support_limit() == 4
        assert TorusField.zeros(3).support_limit() == -1

    def test_arithmetic_mixed_bands(self):
        a = TorusField.from_modes({1: 1}, 2)
        b = TorusField.from_modes({5: 1}, 6)
        c = a + b - b
        assert c.j_max == 6 and c.coefficient(1) == 1 and c.coefficient(5) == 0
        assert (2 * a).coefficient(1) == 2 and (-a).coefficient(1) == -1

    def test_sobolev_datum_normalized(self):
        for s in (0.0, 1.0, 2.5):
            assert hs_norm(TorusField.sobolev_datum(32, s), s) == pytest.approx(1.0, rel=1e-14)


class TestMultiplier:
    @pytest.mark.parametrize("j, factor", [(3, 1.0), (4, 1.0), (6, 0.5), (8, 0.0), (9, 0.0), (-6, 0.5)])
    def test_profile_J8(self, j, factor):
        u = single(j, 12, 1.0)
        assert apply_multiplier(u, 8).coefficient(j) == pytest.approx(factor, abs=1e-15)

    def test_profile_shape(self):
        j = np.arange(-40, 41)
        p = multiplier_profile(16, j)
        assert np.all((0 <= p) & (p <= 1))
        assert np.all(p[np.abs(j) <= 8] == 1) and np.all(p[np.abs(j) > 16] == 0)
        ramp = (np.abs(j) >= 8) & (np.abs(j) <= 16)
        assert np.allclose(p[ramp], 2 * (1 - np.abs(j[ramp]) / 16))

    def test_small_J_rejected(self):
        with pytest.raises(ValueError):
            apply_multiplier(single(0), 1)

    @given(st.integers(2, 60), st.floats(0, 6), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_contraction(self, J, s, seed):
        u = TorusField.random(40, np.random.default_rng(seed))
        assert hs_norm(apply_multiplier(u, J), s) <= hs_norm(u, s) * (1 + 1e-15)


class TestInequalities:
    def test_interpolation(self, rng):
        violations = 0
        for _ in range(1000):
            u = TorusField.random(int(rng.integers(1, 64)), rng, decay=float(rng.uniform(0, 3)))
            s = int(rng.integers(1, 9))
            g = int(rng.integers(0, s + 1))
            lhs = hs_norm(u, s - g)
            rhs = hs_norm(u, s) ** ((s - g) / s) * hs_norm(u, 0) ** (g / s)
            violations += lhs > rhs * (1 + 1e-10)
        assert violations == 0

    def test_tail_bound(self, rng):
        violations = 0
        for _ in range(1000):
            u = TorusField.random(int(rng.integers(1, 128)), rng, decay=float(rng.uniform(0, 3)))
            J = int(2 * rng.integers(1, 64))
            s = int(rng.integers(0, 9))
            g = int(rng.integers(0, s + 1))
            tail = u - apply_multiplier(u, J)
            violations += hs_norm(tail, s - g) > (2 / J) ** g * hs_norm(u, s)
        assert violations == 0


class TestEmbedding:
    def test_single_mode(self):
        st_field = embed_initial(single(2, 4), 10.0, 3)
        c = st_field.coeffs
        assert c[2 + 4, 3] == 1 and np.count_nonzero(c) == 1

    def test_zero_and_two_modes(self):
        assert not np.any(embed_initial(TorusField.zeros(3), 5.0, 2).coeffs)
        c = embed_initial(TorusField.from_modes({1: 1, -2: 3j}, 3), 5.0, 4).coeffs
        rows, cols = np.nonzero(c)
        assert len(rows) == 2 and set(cols) == {4}

    def test_norm_preserved(self, rng):
        u = TorusField.random(6, rng)
        assert embed_initial(u, 3.0, 5, j_max=9).l2_norm() == hs_norm(u, 0)

    def test_band_rejected(self):
        with pytest.raises(ValueError, match="band 5"):
            embed_initial(single(5, 6), 4.0, 2, j_max=4)

    def test_x_trace(self):
        c = np.zeros((3, 5), dtype=complex)
        c[2, 3] = 1  # j = 1, n = 1
        f = SpaceTimeField(c, 1, 2, 4.0)
        assert f.x_trace(2.0).coefficient(1) == pytest.approx(np.exp(0.5j))


class TestDyadic:
    def test_R4(self):
        u = TorusField(np.ones(41), 20)
        kept = np.abs(dyadic_slice(u, 4).frequencies[np.abs(dyadic_slice(u, 4).coeffs) > 0])
        assert set(kept) == set(range(2, 16))

    def test_mode8_windows(self):
        u = single(8, 200)
        hits = [R for R in dyadic_scales(200) if dyadic_slice(u, R).coefficient(8) != 0]
        assert hits == [4, 8, 16]

    def test_cover_multiplicity(self):
        j_max = 300
        scales = dyadic_scales(j_max)
        count = np.zeros(2 * j_max + 1, dtype=int)
        u = TorusField(np.ones(2 * j_max + 1), j_max)
        for R in scales:
            count += dyadic_slice(u, R).coeffs.real.astype(int)
        k = np.abs(u.frequencies)
        # R ranges over (k/4, 4k) with R >= 1: three powers of two when k is one, four otherwise
        power = (k >= 1) & ((k & (k - 1)) == 0)
        assert count[j_max] == 0 and count[j_max + 1] == 2
        assert np.all(count[power & (k > 1)] == 3)
        assert np.all(count[(k >= 1) & ~power] == 4)

    def test_zero_and_bad_scale(self):
        for R in dyadic_scales(30):
            assert not np.any(dyadic_slice(TorusField.zeros(30), R).coeffs)
        with pytest.raises(ValueError):
            dyadic_slice(single(1), 6)
