import json
import math

import numpy as np
import pytest

from stokes_resolvent import (
    Field,
    HalfSpaceSolution,
    RhsTriple,
    SlabGrid,
    boundary_corrector,
    kernel_decay_probe,
    lq_norm,
    m0_eval,
    parity_extend,
    solve_half_space,
    vector_field,
)
from stokes_resolvent.data import random_slab_field, random_slab_rhs
from stokes_resolvent.field import bwd, fwd, tensor_field
from stokes_resolvent.halfspace import (
    corrector_symbol,
    m0_derivative,
    relative_slab_residual,
    slab_residual,
)

from conftest import DATA_DIR, sector_lambdas

THETA = math.pi / 4
EDGE = np.exp(1j * 0.9 * (math.pi - THETA))


def _reference_rows():
    return json.loads((DATA_DIR / "kernel_reference.json").read_text())["rows"]


def _trace_max(sol: HalfSpaceSolution):
    u0, _ = sol.values(np.array([0.0]))
    return np.max(np.abs(u0))


class TestKernelExamples:
    def test_zero_frequency(self):
        assert m0_eval(0.0, 1.0, 1.0).m0 == pytest.approx(math.exp(-1) - 1, rel=1e-15)

    @pytest.mark.parametrize("s", [0.0, 0.3, 7.0, 1e8])
    @pytest.mark.parametrize("lam", [1.0, EDGE, 1e-3 * np.conj(EDGE)])
    def test_boundary_values(self, s, lam):
        e = m0_eval(s, 0.0, lam)
        assert e.m0 == 0
        assert abs(e.dm0 + 1) <= 1e-13
        assert e.exp_fast == 1 and e.exp_slow == 1

    def test_array_input(self):
        s = np.array([0.0, 1.0, 10.0])
        e = m0_eval(s[:, None], np.array([0.0, 1.0])[None], 1.0)
        assert e.m0.shape == (3, 2)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            m0_eval(-1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            m0_eval(1.0, -0.1, 1.0)


class TestKernelReference:
    """Stable kernel forms against 50-digit values of the plain difference quotient."""

    @pytest.mark.parametrize("row", _reference_rows(), ids=lambda r: f"{r['lam']}-s{r['s']}-z{r['z']}-k{r['order']}")
    def test_against_reference(self, row):
        lam = complex(float(row["lam_re"]), float(row["lam_im"]))
        ref = complex(float(row["re"]), float(row["im"]))
        s, z, k = float(row["s"]), float(row["z"]), row["order"]
        values = [complex(m0_derivative(s, z, lam, k))]
        if k < 2:
            e = m0_eval(s, z, lam)
            values.append(e.m0 if k == 0 else e.dm0)
        for v in values:
            # the floor covers references below the double range, e.g. e^{-5e6}
            assert abs(v - ref) <= 1e-12 * abs(ref) + 1e-300

    def test_stable_matches_naive_where_well_conditioned(self):
        for lam in (1.0, EDGE, 3.0 - 1j):
            for s in (0.0, 0.5, 2.0):
                for z in (0.1, 1.0, 3.0):
                    a = np.sqrt(lam + s * s)
                    naive = (np.exp(-a * z) - np.exp(-s * z)) / (a - s)
                    assert abs(m0_eval(s, z, lam).m0 - naive) <= 1e-12 * abs(naive)

    def test_large_frequency_no_cancellation(self):
        # naive subtraction loses every digit here; the stable form keeps them
        lam, s, z = 1.0, 1e8, 1e-9
        ref = complex(m0_derivative(s, z, lam, 0))
        # leading terms of the series: -z e^{-s z} (1 - lam z / (2 s)...)
        approx = -z * math.exp(-s * z)
        assert abs(ref - approx) <= 1e-6 * abs(approx)

    def test_exponential_basis_oracle(self):
        # d^k m0 = ((-a)^k e^{-az} - (-s)^k e^{-sz}) / (a - s) for well-separated a, s
        lam = 2.0 + 1.5j
        for s in (0.2, 1.0, 3.0):
            a = np.sqrt(lam + s * s)
            for z in (0.0, 0.4, 2.0):
                for k in range(4):
                    exact = ((-a) ** k * np.exp(-a * z) - (-s) ** k * np.exp(-s * z)) / (a - s)
                    got = m0_derivative(s, z, lam, k)
                    assert abs(got - exact) <= 1e-12 * max(abs(exact), 1e-300)

    def test_negative_order(self):
        with pytest.raises(ValueError):
            m0_derivative(1.0, 1.0, 1.0, -1)


class TestCorrectorSymbol:
    def test_single_mode(self):
        for z in (0.0, 0.5, 2.0):
            U, P = corrector_symbol([1.0], z, 1.0)
            e = m0_eval(1.0, z, 1.0)
            assert abs(U[0, 0] + e.dm0) <= 1e-15
            assert abs(U[1, 0] - 1j * e.m0) <= 1e-15
            assert abs(P[0] + 1j * (math.sqrt(2) + 1) * math.exp(-z)) <= 1e-14

    def test_trace(self):
        U, P = corrector_symbol([1.0], 0.0, 1.0)
        assert abs(U[0, 0] - 1) <= 1e-15 and U[1, 0] == 0

    @pytest.mark.parametrize("lam", [1.0, EDGE, 0.01])
    def test_small_frequency_limit(self, lam):
        z = 0.7
        U0, P0 = corrector_symbol([0.0, 0.0], z, lam)
        xi = np.array([0.6, 0.8]) * 1e-7
        U, P = corrector_symbol(xi, z, lam)
        assert np.max(np.abs(U - U0)) <= 1e-5
        np.testing.assert_allclose(U0[:2], np.eye(2) * np.exp(-np.sqrt(lam) * z), rtol=1e-15)
        assert not np.any(U0[2]) and not np.any(P0)

    @pytest.mark.parametrize("lam", [1.0, EDGE, 25.0j])
    def test_homogeneous_ode(self, lam):
        # -u'' + s^2 u + lam u + (i xi p, p') = 0 and i xi.u' + u_d' = 0 mode-wise
        xi = np.array([0.8, -1.1])
        s2 = xi @ xi
        for z in (0.0, 0.3, 1.7):
            U0, P0 = corrector_symbol(xi, z, lam, 0)
            U1, P1 = corrector_symbol(xi, z, lam, 1)
            U2, _ = corrector_symbol(xi, z, lam, 2)
            mom_t = -U2[:2] + (s2 + lam) * U0[:2] + 1j * xi[:, None] * P0[None]
            mom_n = -U2[2] + (s2 + lam) * U0[2] + P1
            div = 1j * xi @ U0[:2] + U1[2]
            scale = np.max(np.abs(U2)) + abs(lam) * np.max(np.abs(U0))
            assert np.max(np.abs(mom_t)) <= 1e-13 * scale
            assert np.max(np.abs(mom_n)) <= 1e-13 * scale
            assert np.max(np.abs(div)) <= 1e-13 * scale


class TestParityExtend:
    def test_even_tangential(self):
        s = SlabGrid.make(2, 8, 17, math.pi)
        Z = np.broadcast_to(s.z, s.shape)
        F = vector_field(s, np.stack([np.cos(Z), np.zeros(s.shape)]))
        ext = parity_extend(RhsTriple(F=F))
        zz = s.extended().coords(1)
        np.testing.assert_allclose(ext.F.data[0], np.broadcast_to(np.cos(zz), ext.grid.shape), atol=1e-15)

    def test_odd_normal(self):
        s = SlabGrid.make(2, 8, 17, math.pi)
        Z = np.broadcast_to(s.z, s.shape)
        F = vector_field(s, np.stack([np.zeros(s.shape), np.sin(Z)]))
        ext = parity_extend(RhsTriple(F=F))
        zz = s.extended().coords(1)
        np.testing.assert_allclose(ext.F.data[1], np.broadcast_to(np.sin(zz), ext.grid.shape), atol=1e-15)

    def test_odd_tensor_profile(self):
        s = SlabGrid.make(2, 8, 17, 4.0)
        prof = np.broadcast_to(s.z * (4.0 - s.z), s.shape)
        f = np.zeros((2, 2) + s.shape)
        f[0, 1] = prof
        ext = parity_extend(RhsTriple(f=tensor_field(s, f))).f.data[0, 1]
        m = 16
        for j in range(1, m):
            np.testing.assert_array_equal(ext[:, 2 * m - j], -ext[:, j])
        np.testing.assert_array_equal(ext[:, : s.n_vertical], prof)

    def test_restriction_reproduces(self, slab2):
        rhs = random_slab_rhs(slab2, 2)
        ext = parity_extend(rhs)
        for name in "Ffg":
            np.testing.assert_array_equal(getattr(ext, name).data[..., : slab2.n_vertical], getattr(rhs, name).data)

    def test_odd_boundary_value_rejected(self):
        s = SlabGrid.make(2, 8, 17, 4.0)
        F = vector_field(s, np.ones((2,) + s.shape))
        with pytest.raises(ValueError):
            parity_extend(RhsTriple(F=F))
        lax = parity_extend(RhsTriple(F=F), strict=False)
        assert not np.any(lax.F.data[1][:, [0, 16]])

    def test_torus_rejected(self, torus2):
        with pytest.raises(ValueError):
            parity_extend(RhsTriple(grid=torus2))


class TestBoundaryCorrector:
    def test_zero_trace(self, slab2):
        u, p = boundary_corrector(Field.zeros(slab2.horizontal, 1), 1.0, slab2)
        assert not np.any(u.data) and not np.any(p.data)

    @pytest.mark.parametrize("lam", [1.0, EDGE, 1e3 * np.conj(EDGE)])
    def test_trace_exact(self, slab2, lam):
        rng = np.random.default_rng(1)
        hz = slab2.horizontal
        c = np.zeros((1,) + hz.shape, dtype=complex)
        c[0, :9] = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        c[0, -8:] = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        h = Field(hz, bwd(c, hz))
        u, _ = boundary_corrector(h, lam, slab2)
        assert np.max(np.abs(u.data[0, :, 0] - h.data[0])) <= 1e-12 * np.max(np.abs(h.data))
        assert np.max(np.abs(u.data[1, :, 0])) <= 1e-12 * np.max(np.abs(h.data))

    def test_single_mode(self):
        s = SlabGrid.make(2, 16, 33, 4.0)
        X = s.horizontal.mesh()[0]
        h = Field(s.horizontal, np.exp(1j * X)[None])
        u, p = boundary_corrector(h, 1.0, s)
        e = m0_eval(1.0, s.z, 1.0)
        phase = np.exp(1j * X)[:, None]
        np.testing.assert_allclose(u.data[0], -e.dm0[None] * phase, atol=1e-14)
        np.testing.assert_allclose(u.data[1], 1j * e.m0[None] * phase, atol=1e-14)
        np.testing.assert_allclose(p.data, -1j * (math.sqrt(2) + 1) * np.exp(-s.z)[None] * phase, atol=1e-14)

    def test_fd_residual_converges(self):
        # the nodal corrector satisfies the homogeneous system up to FD truncation
        errs = []
        for nv in (65, 129, 257):
            s = SlabGrid.make(2, 16, nv, 8.0)
            X = s.horizontal.mesh()[0]
            h = Field(s.horizontal, (np.cos(X) + 0.5 * np.sin(2 * X))[None])
            u, p = boundary_corrector(h, 1.0, s)
            sol = HalfSpaceSolution.zeros(s, 1.0)
            sol = HalfSpaceSolution(s, sol.lam, sol.torus_u, sol.torus_p, fwd(h.data, s.horizontal))
            assert np.max(np.abs(sol.u.data - u.data)) <= 1e-14
            assert np.max(np.abs(sol.p.data - p.data)) <= 1e-14
            mom, div = slab_residual(sol, RhsTriple(grid=s), "fd4")
            errs.append(max(np.max(np.abs(mom.data[..., 2:-2])), np.max(np.abs(div.data[..., 2:-2]))))
        # fourth-order truncation: each halving of dz gains at least a factor 10
        assert errs[0] / errs[1] > 10 and errs[1] / errs[2] > 10

    def test_outside_sector(self, slab2):
        with pytest.raises(ValueError):
            boundary_corrector(Field.zeros(slab2.horizontal, 1), -2.0, slab2)

    def test_wrong_components(self, slab2):
        with pytest.raises(ValueError):
            boundary_corrector(Field.zeros(slab2.horizontal, 0), 1.0, slab2)


class TestSolveHalfSpace:
    def test_zero(self, slab2):
        sol = solve_half_space(RhsTriple(grid=slab2), 1.0)
        assert not np.any(sol.u.data) and not np.any(sol.p.data)

    @pytest.mark.parametrize("lam", sector_lambdas())
    def test_trace_and_residual(self, slab2, lam):
        rhs = random_slab_rhs(slab2, 4)
        sol = solve_half_space(rhs, lam)
        assert _trace_max(sol) <= 1e-10 * np.max(np.abs(sol.u.data))
        mom, div = relative_slab_residual(sol, rhs)
        assert mom <= 1e-9 and div <= 1e-9

    def test_tangential_forcing_example(self):
        s = SlabGrid.make(2, 32, 65, 8.0)
        X = s.horizontal.mesh()[0][:, None]
        F = np.stack([np.sin(s.z)[None] * np.cos(X), np.zeros(s.shape)])
        rhs = RhsTriple(F=vector_field(s, F))
        sol = solve_half_space(rhs, 1.0)
        assert _trace_max(sol) <= 1e-10 * np.max(np.abs(sol.u.data))
        assert max(relative_slab_residual(sol, rhs)) <= 1e-9

    def test_parity_data_normal_trace_vanishes(self, slab2):
        F = random_slab_field(slab2, 1, 6)
        sol = solve_half_space(RhsTriple(F=F), 1.0)
        periodic_normal = np.sum(sol.torus_u[1], axis=-1)
        assert np.max(np.abs(periodic_normal)) <= 1e-12 * np.max(np.abs(sol.torus_u))
        assert sol.trace.shape == (1,) + slab2.horizontal.shape

    @pytest.mark.parametrize("seed", range(3))
    def test_normal_component_vanishes_on_boundary(self, slab2, seed):
        sol = solve_half_space(random_slab_rhs(slab2, seed), 0.3 - 0.2j)
        assert np.max(np.abs(sol.u.data[1, :, 0])) <= 1e-11 * np.max(np.abs(sol.u.data))

    def test_three_dimensional(self):
        s = SlabGrid.make(3, 8, 17, 6.0)
        rhs = random_slab_rhs(s, 1)
        sol = solve_half_space(rhs, 2.0 + 1j)
        assert _trace_max(sol) <= 1e-10 * np.max(np.abs(sol.u.data))
        assert max(relative_slab_residual(sol, rhs)) <= 1e-9

    def test_linearity(self, slab2):
        a = random_slab_rhs(slab2, 1)
        b = random_slab_rhs(slab2, 2)
        lam = 1.0 + 1.0j
        s = solve_half_space(a + b * 2.0, lam)
        t = solve_half_space(a, lam) + solve_half_space(b, lam) * 2.0
        assert np.max(np.abs(s.u.data - t.u.data)) <= 1e-13 * np.max(np.abs(s.u.data))

    def test_unpacks(self, slab2):
        u, p = solve_half_space(random_slab_rhs(slab2, 0), 1.0)
        assert u.rank == 1 and p.rank == 0

    def test_norms_quadratures(self, slab2):
        sol = solve_half_space(random_slab_rhs(slab2, 0, spectrum="smooth"), 1.0)
        a = sol.norms(2, "nodes")
        assert lq_norm(sol.u, 2) == pytest.approx(a["u"], rel=1e-14)
        # the graded Gauss rule against a fine trapezoid of the same representation
        b = sol.norms(2, "gauss")
        z = np.linspace(0.0, slab2.height, 8193)
        w = np.full(z.size, z[1]) * slab2.horizontal.cell_volume
        w[[0, -1]] *= 0.5
        u, p = sol.values(z)
        fine_u = math.sqrt(np.sum(np.sum(np.abs(u) ** 2, axis=0) * w))
        fine_p = math.sqrt(np.sum(np.abs(p) ** 2 * w))
        assert b["u"] == pytest.approx(fine_u, rel=1e-7)
        assert b["p"] == pytest.approx(fine_p, rel=1e-7)
        with pytest.raises(ValueError):
            sol.norms(2, "simpson")

    def test_mean_divergence_rejected_unless_projected(self, slab2):
        g = Field(slab2, np.ones(slab2.shape))
        with pytest.raises(ValueError):
            solve_half_space(RhsTriple(g=g), 1.0)
        sol = solve_half_space(RhsTriple(g=g), 1.0, project_mean=True)
        assert sol.info["g_mean_removed"] == pytest.approx(1.0)

    def test_errors(self, slab2, torus2):
        with pytest.raises(ValueError):
            solve_half_space(RhsTriple(grid=slab2), -1.0)
        with pytest.raises(ValueError):
            solve_half_space(RhsTriple(grid=torus2), 1.0)
        with pytest.raises(ValueError):
            slab_residual(solve_half_space(RhsTriple(grid=slab2), 1.0), RhsTriple(grid=slab2), "spline")


class TestKernelDecayProbe:
    def test_slow_exponential(self):
        s = np.linspace(0.0, 16.0, 65)
        z = np.linspace(0.0, 8.0, 33)
        val = kernel_decay_probe(1.0, 0.5, s, z, kernel=lambda xi, x: np.exp(-np.linalg.norm(xi) * x), max_order=0)
        # sup of (1 + x) e^{-s x / 2} is attained at s = 0, x = 8
        assert val == pytest.approx(9.0, rel=1e-14)

    def test_boundary_slice(self):
        val = kernel_decay_probe(1.0, 0.5, np.linspace(0.1, 16.0, 40), [0.0], max_order=0)
        assert val == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("lam", [1.0, EDGE, np.conj(EDGE)])
    def test_composite_kernels_finite(self, lam):
        val = kernel_decay_probe(lam, 0.5, np.linspace(0.05, 8.0, 12), np.linspace(0.0, 4.0, 9))
        assert math.isfinite(val) and val >= 1.0

    def test_bad_delta(self):
        with pytest.raises(ValueError):
            kernel_decay_probe(1.0, 1.5)
