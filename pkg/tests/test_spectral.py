"""Spectral representation: truncation, norms, transforms, serialization."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusmfc.spectral import (
    GridField,
    SpectralField,
    alias_free_grid,
    dirichlet_truncate,
    embed,
    from_grid,
    gradient,
    grid_points,
    is_probability_coeffs,
    l2_error,
    linf_error,
    linf_truncation_constant,
    min_on_grid,
    mode_cube,
    pair,
    read_field_csv,
    sobolev_norm,
    to_grid,
    truncation_tail_sum,
    write_field_csv,
)

from .oracles import naive_eval, naive_tail_sum, random_hermitian_cube


def hermitian_field(seed: int, dim: int, band: int, decay: float = 0.0) -> SpectralField:
    rng = np.random.default_rng(seed)
    return SpectralField(dim, band, random_hermitian_cube(rng, dim, band, decay))


def cosine_field(dim: int, mode: tuple[int, ...], amplitude: float = 1.0) -> SpectralField:
    band = max(abs(m) for m in mode)
    neg = tuple(-m for m in mode)
    return SpectralField.from_modes(
        dim, band, {mode: amplitude / 2.0, neg: amplitude / 2.0})


class TestModeLayout:
    def test_lexicographic_order_d2(self):
        cube = mode_cube(2, 1)
        expected = list(itertools.product([-1, 0, 1], repeat=2))
        assert [tuple(row) for row in cube] == expected

    def test_coeff_lookup_matches_layout(self):
        f = SpectralField.from_modes(2, 1, {(1, -1): 0.5j, (-1, 1): -0.5j})
        assert f.coeff((1, -1)) == 0.5j
        assert f.coeff((2, 0)) == 0  # outside band reads as zero


class TestTruncate:
    def test_identity_within_band(self):
        f = hermitian_field(0, 1, 2)
        g = dirichlet_truncate(f, 2)
        assert g.band == 2
        assert np.array_equal(g.coeffs, f.coeffs)

    def test_removes_all_modes_above_band(self):
        f = cosine_field(1, (3,))
        g = dirichlet_truncate(f, 2)
        assert g.band == 2
        assert np.all(g.coeffs == 0)

    def test_negative_band_rejected(self):
        with pytest.raises(ValueError):
            dirichlet_truncate(hermitian_field(1, 1, 2), -1)

    @pytest.mark.parametrize("q", [2, 4])
    @pytest.mark.parametrize("n", [2, 4, 8])
    def test_l2_truncation_bound_constant_one(self, q, n):
        # ||f - f*D^n||_2 <= ||f||_{2,q} / n^q, constant exactly 1
        for seed in range(20):
            f = hermitian_field(100 + seed, 1, 16, decay=q + 1)
            err = l2_error(f, embed(dirichlet_truncate(f, n), f.band))
            assert err <= sobolev_norm(f, q) / n**q * (1 + 1e-12)

    def test_idempotent(self):
        f = hermitian_field(7, 2, 5)
        once = dirichlet_truncate(f, 3)
        twice = dirichlet_truncate(once, 3)
        assert np.array_equal(once.coeffs, twice.coeffs)

    @given(st.integers(0, 2**32 - 1), st.integers(0, 6), st.integers(0, 8))
    @settings(max_examples=40, deadline=None)
    def test_sobolev_contraction_any_band(self, seed, n, qq):
        # subset of non-negative weighted terms; equality only at full band
        f = hermitian_field(seed, 1, 8)
        q = qq / 2.0
        assert sobolev_norm(dirichlet_truncate(f, n), q) <= sobolev_norm(f, q) * (1 + 1e-14)


class TestSobolevNorm:
    def test_constant_is_one_for_any_q(self):
        f = SpectralField.constant(1, 1.0)
        for q in (0, 1, 2.5, 4):
            assert sobolev_norm(f, q) == 1.0

    def test_cosine_q2_sqrt2(self):
        # coeffs 1/2 at k = +-1, weight (1+1)^2 = 4: sum = 4*(1/4+1/4) = 2
        f = cosine_field(1, (1,))
        assert abs(sobolev_norm(f, 2) - np.sqrt(2)) < 1e-14

    def test_q_zero_is_l2(self):
        f = hermitian_field(3, 2, 3)
        assert abs(sobolev_norm(f, 0) - l2_error(f, SpectralField.zero(2, 3))) < 1e-14

    def test_max_norm_weighting_d2(self):
        # single mode (1,1): max-norm weight (1+1)^q, not the euclidean (1+2)^q
        f = SpectralField.from_modes(2, 1, {(1, 1): 0.5, (-1, -1): 0.5})
        assert abs(sobolev_norm(f, 1) - np.sqrt(2 * 0.25 * 2)) < 1e-14


class TestGradient:
    def test_constant_gives_zero(self):
        (g,) = gradient(SpectralField.constant(1, 3.0))
        assert np.all(g.coeffs == 0)

    def test_cosine_hand_derivative(self):
        # d/dx cos(2 pi x) = -2 pi sin(2 pi x): coeff(+1) = i pi, coeff(-1) = -i pi
        (g,) = gradient(cosine_field(1, (1,)))
        assert g.coeff((1,)) == pytest.approx(1j * np.pi)
        assert g.coeff((-1,)) == pytest.approx(-1j * np.pi)

    def test_grid_samples_match_analytic(self):
        (g,) = gradient(cosine_field(1, (1,)))
        grid = to_grid(g, 16)
        x = np.arange(16) / 16
        assert np.max(np.abs(grid.values - (-2 * np.pi * np.sin(2 * np.pi * x)))) < 1e-12

    def test_commutes_with_truncation(self):
        f = hermitian_field(11, 2, 4)
        left = [dirichlet_truncate(c, 2).coeffs for c in gradient(f)]
        right = [c.coeffs for c in gradient(dirichlet_truncate(f, 2))]
        for a, b in zip(left, right):
            assert np.array_equal(a, b)


class TestGridTransforms:
    def test_constant_field(self):
        g = to_grid(SpectralField.constant(1, 1.0), 8)
        assert np.allclose(g.values, 1.0, atol=1e-15)

    def test_cosine_values(self):
        g = to_grid(cosine_field(1, (1,)), 8)
        x = np.arange(8) / 8
        assert np.max(np.abs(g.values - np.cos(2 * np.pi * x))) < 1e-14

    def test_roundtrip_100_random_band4(self):
        worst = 0.0
        for seed in range(100):
            f = hermitian_field(1000 + seed, 1, 4)
            back = from_grid(to_grid(f, 16), 4)
            scale = max(1.0, float(np.max(np.abs(f.coeffs))))
            worst = max(worst, float(np.max(np.abs(back.coeffs - f.coeffs))) / scale)
        assert worst <= 1e-12

    @pytest.mark.parametrize("dim,band,res", [(1, 3, 9), (2, 2, 7)])
    def test_matches_direct_summation(self, dim, band, res):
        f = hermitian_field(42, dim, band)
        grid = to_grid(f, res)
        direct = naive_eval(f, grid_points(dim, res)).real.reshape(grid.values.shape)
        assert np.max(np.abs(grid.values - direct)) < 1e-11

    def test_grid_too_small_rejected(self):
        with pytest.raises(ValueError):
            to_grid(hermitian_field(1, 1, 4), 8)  # needs >= 9

    def test_band_too_large_rejected(self):
        g = to_grid(hermitian_field(1, 1, 2), 8)
        with pytest.raises(ValueError):
            from_grid(g, 4)  # (8-1)//2 = 3

    def test_non_hermitian_rejected(self):
        cube = np.zeros(5, np.complex128)
        cube[3] = 1.0  # mode +1 without its conjugate partner
        with pytest.raises(ValueError):
            to_grid(SpectralField(1, 2, cube), 16)

    def test_imag_residue_recorded(self):
        g = to_grid(hermitian_field(5, 1, 4), 16)
        assert 0.0 <= g.imag_residue < 1e-13

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_roundtrip_is_hermitian_and_exact(self, seed):
        f = hermitian_field(seed, 1, 5)
        back = from_grid(to_grid(f, alias_free_grid(5)), 5)
        assert back.hermitian_residue() < 1e-14
        assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-12 * max(
            1.0, float(np.max(np.abs(f.coeffs))))


class TestMinOnGrid:
    def test_constant(self):
        assert min_on_grid(SpectralField.constant(1, 1.0), 8) == pytest.approx(1.0)

    def test_shifted_cosine_attains_half(self):
        f = SpectralField.from_modes(1, 1, {(0,): 1.0, (1,): 0.25, (-1,): 0.25})
        # grid of 8 contains x = 1/2 where 1 + 0.5 cos(2 pi x) = 0.5
        assert min_on_grid(f, 8) == pytest.approx(0.5)


class TestProbabilityMembership:
    def test_uniform(self):
        assert is_probability_coeffs(SpectralField.constant(1, 1.0), 8).ok

    def test_negative_density_detected(self):
        f = SpectralField.from_modes(1, 1, {(0,): 1.0, (1,): 1.0, (-1,): 1.0})
        report = is_probability_coeffs(f, 64, tol=1e-9)
        assert not report.ok
        assert report.min_value == pytest.approx(-1.0, abs=1e-9)

    def test_benchmark_density(self):
        f = SpectralField.from_modes(1, 1, {(0,): 1.0, (1,): 0.25, (-1,): 0.25})
        report = is_probability_coeffs(f, 64)
        assert report.ok and report.min_value == pytest.approx(0.5)

    def test_wrong_mass_detected(self):
        f = SpectralField.constant(1, 1.5)
        assert not is_probability_coeffs(f, 8).ok


class TestErrorMetrics:
    def test_identical_fields(self):
        f = hermitian_field(9, 1, 3)
        assert l2_error(f, f) == 0.0
        assert linf_error(f, f, 16) == 0.0

    def test_cosine_l2_norm(self):
        # Parseval: ||cos||_2 = sqrt(1/4 + 1/4) = sqrt(1/2)
        assert l2_error(cosine_field(1, (1,)), SpectralField.zero(1, 1)) == pytest.approx(
            np.sqrt(0.5))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            l2_error(hermitian_field(1, 1, 2), hermitian_field(1, 2, 2))

    def test_union_band(self):
        f = cosine_field(1, (3,))
        g = SpectralField.zero(1, 1)
        assert l2_error(f, g) == pytest.approx(np.sqrt(0.5))


class TestTruncationTailBounds:
    @pytest.mark.parametrize("dim", [1, 2])
    @pytest.mark.parametrize("q,n", [(2, 2), (2, 4), (4, 2), (4, 8)])
    def test_tail_sum_matches_explicit_loop(self, dim, q, n):
        band = 12 if dim == 1 else 8
        assert truncation_tail_sum(dim, q, n, band) == pytest.approx(
            naive_tail_sum(dim, q, n, band), rel=1e-13)

    def test_infinite_tail_dominates_banded(self):
        assert truncation_tail_sum(1, 3, 4) > truncation_tail_sum(1, 3, 4, band=16)

    @pytest.mark.parametrize("dim,band", [(1, 16), (2, 8)])
    def test_linf_truncation_bound(self, dim, band):
        # ||f - f*D^n||_inf <= sqrt(tail sum) * ||f||_{2,q}
        q, n = 3, 4
        for seed in range(10):
            f = hermitian_field(500 + seed, dim, band, decay=q)
            err = linf_error(f, embed(dirichlet_truncate(f, n), band),
                             alias_free_grid(band))
            bound = linf_truncation_constant(dim, q, n, band) * sobolev_norm(f, q)
            assert err <= bound * (1 + 1e-12)


class TestPairing:
    def test_cosine_against_shifted_density(self):
        # <mu, psi> = sum psi(k) mu(-k) = 1/2*1/4 + 1/2*1/4 = 1/4
        psi = cosine_field(1, (1,))
        mu = SpectralField.from_modes(1, 1, {(0,): 1.0, (1,): 0.25, (-1,): 0.25})
        assert pair(psi, mu) == pytest.approx(0.25)

    def test_against_grid_quadrature(self):
        f = hermitian_field(21, 1, 3)
        g = hermitian_field(22, 1, 3)
        res = 32
        riemann = float(np.mean(to_grid(f, res).values * to_grid(g, res).values))
        assert pair(f, g) == pytest.approx(riemann, abs=1e-12)


class TestHermitianDiscipline:
    @given(st.integers(0, 2**32 - 1), st.integers(1, 2))
    @settings(max_examples=30, deadline=None)
    def test_ops_preserve_symmetry(self, seed, dim):
        f = hermitian_field(seed, dim, 3)
        assert dirichlet_truncate(f, 2).hermitian_residue() < 1e-14
        assert embed(f, 5).hermitian_residue() < 1e-14
        for comp in gradient(f):
            assert comp.hermitian_residue() < 1e-13
        back = from_grid(to_grid(f, alias_free_grid(3)), 3)
        assert back.hermitian_residue() == 0.0  # symmetrized on the way out

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_parseval(self, seed):
        f = hermitian_field(seed, 1, 6)
        grid = to_grid(f, 13)
        grid_l2 = float(np.sqrt(np.mean(grid.values**2)))
        assert abs(grid_l2 - sobolev_norm(f, 0)) <= 1e-12 * max(1.0, grid_l2)


class TestCsvSerialization:
    def test_exact_roundtrip(self, tmp_path):
        f = hermitian_field(77, 2, 3)
        path = tmp_path / "field.csv"
        write_field_csv(f, path)
        back = read_field_csv(path)
        assert back.dim == f.dim and back.band == f.band
        assert np.array_equal(back.coeffs, f.coeffs)

    def test_header_and_order(self, tmp_path):
        f = hermitian_field(78, 2, 1)
        path = tmp_path / "field.csv"
        write_field_csv(f, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "k1,k2,re,im"
        first_modes = [tuple(int(v) for v in line.split(",")[:2]) for line in lines[1:4]]
        assert first_modes == [(-1, -1), (-1, 0), (-1, 1)]

    def test_rejects_scrambled_rows(self, tmp_path):
        f = hermitian_field(79, 1, 1)
        path = tmp_path / "field.csv"
        write_field_csv(f, path)
        lines = path.read_text().strip().splitlines()
        lines[1], lines[2] = lines[2], lines[1]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError):
            read_field_csv(path)
