import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stokes_resolvent import (
    Field,
    ResolventParam,
    RhsTriple,
    Sector,
    SlabGrid,
    TorusGrid,
    fft_backward,
    fft_forward,
    lq_norm,
    neg_sobolev_surrogate,
    principal_sqrt,
    scalar_field,
    sector_contains,
    spectral_derivative,
    vector_field,
    vertical_derivative_fd4,
)
from stokes_resolvent.data import random_field, random_slab_field
from stokes_resolvent.field import component_parity, reflect

THETA = math.pi / 4


class TestSector:
    @pytest.mark.parametrize(
        "lam, expected",
        [
            (1.0, True),
            (-1.0, False),
            (np.exp(1j * 2.35), True),
            (np.exp(1j * 2.36), False),
            (np.exp(-1j * 2.35), True),
            (0.0, False),
        ],
    )
    def test_membership(self, lam, expected):
        assert sector_contains(lam, Sector(THETA)) is expected

    def test_delta_bound(self):
        s = Sector(THETA, delta=0.5)
        assert not sector_contains(0.4, s)
        assert sector_contains(0.6, s)
        assert 0.6 in s

    @pytest.mark.parametrize("theta", [0.0, -0.1, math.pi / 2, 2.0])
    def test_bad_theta(self, theta):
        with pytest.raises(ValueError):
            Sector(theta)

    def test_bad_delta(self):
        with pytest.raises(ValueError):
            Sector(THETA, delta=0.0)


class TestPrincipalSqrt:
    @pytest.mark.parametrize(
        "z, w",
        [(4, 2), (1j, (1 + 1j) / math.sqrt(2)), (-4, 2j), (complex(-4, -0.0), 2j)],
    )
    def test_examples(self, z, w):
        assert abs(principal_sqrt(z) - w) <= 1e-15

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            principal_sqrt(0)

    def test_array_input(self):
        z = np.array([4.0, -9.0, 1j])
        w = principal_sqrt(z)
        np.testing.assert_allclose(w**2, z, atol=1e-14)
        assert np.all(w.real >= 0)

    def test_continuity_in_sector(self, rng):
        span = math.pi - THETA
        for _ in range(100):
            z = 10 ** rng.uniform(-3, 3) * np.exp(1j * rng.uniform(-0.999, 0.999) * span)
            h = abs(z) * 1e-8 * rng.uniform(0, 1) * np.exp(2j * math.pi * rng.uniform())
            assert abs(principal_sqrt(z + h) - principal_sqrt(z)) <= 1e-7 * abs(principal_sqrt(z))


class TestResolventParam:
    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(min_value=-6, max_value=6),
        st.floats(min_value=-0.999, max_value=0.999),
    )
    def test_sqrt_invariants(self, log_r, frac):
        lam = 10**log_r * np.exp(1j * frac * (math.pi - THETA))
        p = ResolventParam(lam)
        eps = np.finfo(float).eps
        ref = complex(mpmath.sqrt(mpmath.mpc(p.lam.real, p.lam.imag)))
        assert abs(p.sqrt_lam - ref) <= 2 * eps * abs(ref)
        # the root is within about 1 ulp; squaring it in floating point adds up to about 3 more
        assert abs(p.sqrt_lam**2 - p.lam) <= 4 * eps * abs(p.lam)
        assert p.sqrt_lam.real >= abs(p.lam) ** 0.5 * math.cos((math.pi - THETA) / 2) * (1 - 1e-12)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            ResolventParam(0)

    def test_check_outside_sector(self):
        with pytest.raises(ValueError):
            ResolventParam(-1.0).check(Sector(THETA))


class TestGrids:
    def test_torus_layout(self):
        g = TorusGrid.cube(2, 8)
        assert g.shape == (8, 8)
        assert g.n_per_axis == 8
        assert g.cell_volume == pytest.approx((2 * math.pi / 8) ** 2)
        k = g.wavenumbers(0, nyquist=True)
        assert k[4] == -4.0
        np.testing.assert_array_equal(np.sort(k[k != -4]), -np.sort(k[k != -4])[::-1])
        assert g.wavenumbers(0)[4] == 0.0
        assert set(g.index_wavenumbers(0)) == {-4, -3, -2, -1, 0, 1, 2, 3}

    @pytest.mark.parametrize("n", [0, 1, 6, 12])
    def test_non_power_of_two(self, n):
        with pytest.raises(ValueError):
            TorusGrid.cube(2, n)

    def test_slab_nodes(self):
        s = SlabGrid.make(2, 16, 17, 4.0)
        assert s.z[0] == 0.0 and s.z[-1] == 4.0
        assert s.dz == 0.25
        assert s.shape == (16, 17)
        assert s.extended().shape == (16, 32)
        assert s.extended().lengths[-1] == 8.0
        assert s.vertical_weights().sum() == pytest.approx(4.0)

    @pytest.mark.parametrize("nv", [2, 4, 10, 18])
    def test_bad_vertical_count(self, nv):
        with pytest.raises(ValueError):
            SlabGrid.make(2, 16, nv, 4.0)


class TestFields:
    def test_shape_checks(self, torus2):
        with pytest.raises(ValueError):
            Field(torus2, np.zeros((3, 16, 16)))
        with pytest.raises(ValueError):
            Field(torus2, np.zeros((16, 8)))
        with pytest.raises(ValueError):
            vector_field(torus2, np.zeros((16, 16)))
        assert Field(torus2, np.zeros((2, 2, 16, 16))).rank == 2

    def test_read_only(self, torus2):
        f = scalar_field(torus2, np.ones((16, 16)))
        with pytest.raises(ValueError):
            f.data[0, 0] = 2.0

    def test_rhs_defaults_and_grid_check(self, torus2):
        rhs = RhsTriple(grid=torus2)
        assert rhs.nonzero == {"F": False, "f": False, "g": False}
        other = TorusGrid.cube(2, 8)
        with pytest.raises(ValueError):
            RhsTriple(F=Field.zeros(torus2, 1), g=Field.zeros(other, 0))
        with pytest.raises(ValueError):
            RhsTriple()
        with pytest.raises(ValueError):
            RhsTriple(F=Field.zeros(torus2, 0))


class TestTransforms:
    def test_constant(self, torus2):
        c = fft_forward(scalar_field(torus2, np.full((16, 16), 2.5 - 1j)))
        assert c[0, 0] == pytest.approx(2.5 - 1j)
        c[0, 0] = 0
        assert np.max(np.abs(c)) <= 1e-15

    def test_cosine_half_weights(self, torus2):
        X = torus2.mesh()
        c = fft_forward(scalar_field(torus2, np.cos(X[0])))
        assert c[1, 0] == pytest.approx(0.5)
        assert c[-1, 0] == pytest.approx(0.5)
        c[1, 0] = c[-1, 0] = 0
        assert np.max(np.abs(c)) <= 1e-15

    @pytest.mark.parametrize("rank", [0, 1, 2])
    def test_round_trip(self, torus3, rank, rng):
        v = rng.standard_normal((3,) * rank + torus3.shape) + 1j * rng.standard_normal((3,) * rank + torus3.shape)
        f = Field(torus3, v)
        back = fft_backward(fft_forward(f), torus3)
        assert np.max(np.abs(back.data - v)) <= 1e-13 * np.max(np.abs(v))

    def test_parseval(self, torus2, rng):
        for seed in range(5):
            f = random_field(torus2, 1, seed, normalize=False)
            c = fft_forward(f)
            spectral = torus2.volume * np.sum(np.abs(c) ** 2)
            assert lq_norm(f, 2) ** 2 == pytest.approx(spectral, rel=1e-12)

    def test_slab_transforms_horizontal_only(self, slab2):
        X = slab2.horizontal.mesh()[0][:, None] * np.ones(slab2.n_vertical)
        c = fft_forward(scalar_field(slab2, np.cos(X) * slab2.z))
        np.testing.assert_allclose(c[1], 0.5 * slab2.z, atol=1e-15)


class TestSpectralDerivative:
    def test_sine(self, torus2):
        X = torus2.mesh()
        d = spectral_derivative(scalar_field(torus2, np.sin(X[0])), 0)
        assert np.max(np.abs(d.data - np.cos(X[0]))) <= 1e-12

    def test_constant(self, torus2):
        d = spectral_derivative(scalar_field(torus2, np.full((16, 16), 3.0)), 1)
        assert np.max(np.abs(d.data)) == 0.0

    def test_single_mode(self, torus2):
        X = torus2.mesh()
        e = np.exp(2j * X[1])
        d = spectral_derivative(scalar_field(torus2, e), 1)
        assert np.max(np.abs(d.data - 2j * e)) <= 1e-12

    def test_nyquist_zeroed(self, torus2):
        X = torus2.mesh()
        d = spectral_derivative(scalar_field(torus2, np.cos(8 * X[0])), 0)
        assert np.max(np.abs(d.data)) <= 1e-12

    def test_trig_polynomial_exact(self, torus3, rng):
        X = torus3.mesh()
        v = 0
        dv = 0
        for _ in range(6):
            k = rng.integers(-3, 4, size=3)
            a = rng.standard_normal() + 1j * rng.standard_normal()
            phase = np.exp(1j * np.tensordot(k, X, axes=1))
            v = v + a * phase
            dv = dv + 1j * k[2] * a * phase
        d = spectral_derivative(scalar_field(torus3, v), 2)
        assert np.max(np.abs(d.data - dv)) <= 1e-11 * np.max(np.abs(dv))

    def test_commutes_with_round_trip(self, torus2):
        f = random_field(torus2, 0, 3)
        rt = fft_backward(fft_forward(f), torus2)
        a = spectral_derivative(f, 0).data
        b = spectral_derivative(rt, 0).data
        assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(a))

    def test_vertical_axis_rejected(self, slab2):
        with pytest.raises(ValueError):
            spectral_derivative(Field.zeros(slab2, 0), 1)


class TestVerticalFD:
    @pytest.mark.parametrize("order, degree", [(1, 4), (2, 4)])
    def test_polynomials_exact(self, slab2, order, degree):
        z = slab2.z
        v = np.broadcast_to((z / 8.0) ** degree, slab2.shape)
        exact = math.factorial(degree) / math.factorial(degree - order) * z ** (degree - order) / 8.0**degree
        d = vertical_derivative_fd4(scalar_field(slab2, v), order)
        np.testing.assert_allclose(d.data[0], exact, atol=1e-10)

    def test_fourth_order(self):
        errs = []
        for nv in (33, 65, 129):
            s = SlabGrid.make(2, 4, nv, 2.0)
            v = np.broadcast_to(np.exp(-s.z), s.shape)
            d = vertical_derivative_fd4(scalar_field(s, v), 1)
            errs.append(np.max(np.abs(d.data + v)))
        assert errs[0] / errs[1] > 12 and errs[1] / errs[2] > 12

    def test_torus_rejected(self, torus2):
        with pytest.raises(ValueError):
            vertical_derivative_fd4(Field.zeros(torus2, 0))


class TestLqNorm:
    def test_constant(self, torus2):
        assert lq_norm(scalar_field(torus2, np.ones((16, 16))), 2) == pytest.approx(2 * math.pi, rel=1e-14)

    def test_sine(self, torus2):
        X = torus2.mesh()
        assert lq_norm(scalar_field(torus2, np.sin(X[0])), 2) == pytest.approx(math.pi * math.sqrt(2), rel=1e-14)

    @pytest.mark.parametrize("q", [1.5, 2.0, 4.0])
    def test_homogeneity(self, torus2, q):
        f = random_field(torus2, 2, 1)
        c = -3.0 + 4.0j
        assert lq_norm(f * c, q) == pytest.approx(5.0 * lq_norm(f, q), rel=1e-14)

    @pytest.mark.parametrize("q", [1.0, 0.5, math.inf])
    def test_bad_exponent(self, torus2, q):
        with pytest.raises(ValueError):
            lq_norm(Field.zeros(torus2, 0), q)

    def test_slab_trapezoid(self):
        s = SlabGrid.make(2, 8, 17, 3.0)
        one = scalar_field(s, np.ones(s.shape))
        assert lq_norm(one, 2) == pytest.approx(math.sqrt(2 * math.pi * 3.0), rel=1e-14)


class TestNegSobolev:
    def test_cosine(self, torus2):
        X = torus2.mesh()
        assert neg_sobolev_surrogate(scalar_field(torus2, np.cos(X[0])), 2) == pytest.approx(
            math.pi * math.sqrt(2), rel=1e-13
        )

    def test_cosine_mode_two(self, torus2):
        X = torus2.mesh()
        assert neg_sobolev_surrogate(scalar_field(torus2, np.cos(2 * X[0])), 2) == pytest.approx(
            math.pi * math.sqrt(2) / 2, rel=1e-13
        )

    def test_zero(self, torus2):
        assert neg_sobolev_surrogate(Field.zeros(torus2, 0), 2) == 0.0

    @pytest.mark.parametrize("seed", range(4))
    @pytest.mark.parametrize("axis", [0, 1])
    def test_inverts_one_derivative(self, torus2, seed, axis):
        h = random_field(torus2, 0, seed, zero_mean=True)
        dh = spectral_derivative(h, axis)
        assert neg_sobolev_surrogate(dh, 2) <= lq_norm(h, 2) * (1 + 1e-10)

    @pytest.mark.parametrize("q", [1.5, 4.0])
    def test_other_exponents(self, torus2, q):
        h = random_field(torus2, 0, 7, zero_mean=True)
        a = neg_sobolev_surrogate(h, q)
        assert math.isfinite(a) and a > 0
        assert neg_sobolev_surrogate(h * 2.5, q) == pytest.approx(2.5 * a, rel=1e-13)

    def test_mean_projected_out(self, torus2):
        X = torus2.mesh()
        g = scalar_field(torus2, np.cos(X[0]) + 7.0)
        assert neg_sobolev_surrogate(g, 2) == pytest.approx(math.pi * math.sqrt(2), rel=1e-13)


class TestReflection:
    def test_parity_signs(self):
        assert list(component_parity(3, 1)) == [1, 1, -1]
        p2 = component_parity(2, 2)
        assert p2.tolist() == [[1, -1], [-1, 1]]

    def test_reflect_vector(self, slab2):
        f = random_slab_field(slab2, 1, 0)
        ext = reflect(f.data, slab2, rank=1)
        m = slab2.n_vertical - 1
        for j in range(1, m):
            np.testing.assert_allclose(ext[0, :, -j], ext[0, :, j], atol=0)
            np.testing.assert_allclose(ext[1, :, -j], -ext[1, :, j], atol=0)
        np.testing.assert_array_equal(ext[..., : slab2.n_vertical], f.data)

    def test_random_slab_odd_components_vanish(self, slab2):
        f = random_slab_field(slab2, 2, 4)
        for j, k in [(0, 1), (1, 0)]:
            assert np.max(np.abs(f.data[j, k][:, [0, -1]])) <= 1e-15
