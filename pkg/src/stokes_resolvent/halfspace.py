"""
Stokes resolvent problem on the slab surrogate of the half-space.

The data are reflected onto the doubled vertical torus (tangential parts
even, normal parts odd), the periodic problem is solved there, and the
remaining tangential trace is removed by an explicit boundary corrector.
Per horizontal mode ``xi'`` with ``s = |xi'|``, ``a = sqrt(lam + s^2)`` and
``eta = xi'_k h_k``::

    u_j = -dm0 xi_j eta / s^2 + (h_j - xi_j eta / s^2) e^{-a z}     (j < d)
    u_d = i m0 eta
    p   = -i (a + s)/s eta e^{-s z}

with ``m0 = (e^{-a z} - e^{-s z}) / (a - s)``.  The difference quotient is
never formed directly: with ``a - s = lam / (a + s)``,

    m0 = e^{-s z} (a + s)/lam expm1(-(a - s) z),

which stays accurate where ``a - s`` is tiny compared with ``s``.

A solution is kept in representation form (periodic coefficients plus
trace coefficients) so that it can be evaluated, together with exact
vertical derivatives, at any height.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .field import (
    DEFAULT_SECTOR,
    Field,
    ResolventParam,
    RhsTriple,
    Sector,
    SlabGrid,
    TorusGrid,
    bwd,
    component_parity,
    fwd,
    lq_norm,
    principal_sqrt,
    reflect,
    spectral_derivative,
    vertical_derivative_fd4,
)
from .wholespace import _check_mean, solve_coefficients

logger = logging.getLogger(__name__)

__all__ = [
    "CorrectorKernelEval",
    "m0_eval",
    "m0_derivative",
    "corrector_symbol",
    "parity_extend",
    "boundary_corrector",
    "HalfSpaceSolution",
    "solve_half_space",
    "resolved_data",
    "slab_residual",
    "relative_slab_residual",
    "operator_residual",
    "gauss_vertical_rule",
    "kernel_decay_probe",
]

ODD_TOL = 1e-12


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


def _kernel_pieces(s, z, lam):
    s = np.asarray(s, dtype=float)
    z = np.asarray(z, dtype=float)
    a = principal_sqrt(lam + s.astype(complex) ** 2)
    r = a + s
    ap = lam / r
    Es = np.exp(-s * z)
    Ea = np.exp(-a * z)
    em = np.expm1(-ap * z)
    return a, r, Es, Ea, em


def m0_derivative(s, z, lam, order: int = 0):
    """
    ``d^k m0 / dz^k`` in the guarded form

        e^{-s z} [ (a+s)/lam (-a)^k expm1(-(a-s) z) + (-1)^k sum_{i<k} a^i s^{k-1-i} ].
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    lam = complex(lam)
    a, r, Es, Ea, em = _kernel_pieces(s, z, lam)
    s = np.asarray(s, dtype=float)
    tail = sum(a**i * s ** (order - 1 - i) for i in range(order)) if order else 0.0
    return Es * ((r / lam) * (-a) ** order * em + (-1) ** order * tail)


@dataclass(frozen=True)
class CorrectorKernelEval:
    """Kernel values at ``(s, x_d)``: ``m0``, its ``x_d`` derivative and the two exponentials."""

    s: object
    x_d: object
    lam: complex
    m0: object
    dm0: object
    exp_fast: object
    exp_slow: object


def m0_eval(s, x_d, lam) -> CorrectorKernelEval:
    """
    Stable evaluation of ``m0(s, x_d) = (e^{-sqrt(lam+s^2) x_d} - e^{-s x_d}) / (sqrt(lam+s^2) - s)``.

    Accepts scalars or broadcastable arrays with ``s >= 0`` and ``x_d >= 0``.

    Examples
    --------
    >>> round(m0_eval(0.0, 1.0, 1.0).m0.real, 4)
    -0.6321
    """
    lam = ResolventParam.of(lam).lam
    if np.any(np.asarray(s) < 0) or np.any(np.asarray(x_d) < 0):
        raise ValueError("m0_eval needs s >= 0 and x_d >= 0")
    a, r, Es, Ea, em = _kernel_pieces(s, x_d, lam)
    m0 = Es * (r / lam) * em
    dm0 = -Es * (1.0 + (r * a / lam) * em)
    out = (m0, dm0, Ea, Es)
    if np.ndim(m0) == 0:
        out = tuple(complex(v) for v in out)
        Es = float(Es)
    return CorrectorKernelEval(s, x_d, lam, out[0], out[1], out[2], Es)


def corrector_symbol(xi, z, lam, order: int = 0):
    """
    Map from the tangential trace ``h^`` to ``(u^, p^)`` at one horizontal
    frequency ``xi`` and height ``z`` (``order``-th ``z`` derivative).

    Returns ``(U, P)`` with shapes ``(d, d-1)`` and ``(d-1,)``.
    """
    lam = ResolventParam.of(lam).lam
    xi = np.asarray(xi, dtype=float).ravel()
    n = xi.size
    s = float(np.sqrt(xi @ xi))
    a = principal_sqrt(lam + s * s)
    Ea = np.exp(-a * z) * (-a) ** order
    U = np.zeros((n + 1, n), dtype=complex)
    P = np.zeros(n, dtype=complex)
    if s == 0.0:
        U[:n, :n] = np.eye(n) * Ea
        return U, P
    proj = np.outer(xi, xi) / s**2
    U[:n, :n] = -m0_derivative(s, z, lam, order + 1) * proj + (np.eye(n) - proj) * Ea
    U[n, :] = 1j * m0_derivative(s, z, lam, order) * xi
    P[:] = -1j * (a + s) / s * (-s) ** order * np.exp(-s * z) * xi
    return U, P


# ---------------------------------------------------------------------------
# parity extension
# ---------------------------------------------------------------------------


def _extend(field: Field, slab: SlabGrid, strict: bool, name: str) -> np.ndarray:
    data = np.array(field.data, copy=True)
    signs = np.broadcast_to(component_parity(slab.d, field.rank), data.shape[: field.rank])
    m = slab.n_vertical - 1
    odd = signs < 0
    if np.any(odd):
        ends = data[..., [0, m]][odd]
        scale = max(1.0, float(np.max(np.abs(data))))
        bad = float(np.max(np.abs(ends), initial=0.0))
        if bad > ODD_TOL * scale:
            if strict:
                raise ValueError(
                    f"{name}: odd-extended component has boundary value {bad:.3e}; "
                    "odd extension is ill-posed"
                )
            logger.debug("%s: zeroing odd boundary samples of size %.3e", name, bad)
        sel = data[odd]
        sel[..., 0] = 0.0
        sel[..., m] = 0.0
        data[odd] = sel
    return reflect(data, slab, rank=field.rank)


def parity_extend(rhs: RhsTriple, strict: bool = True) -> RhsTriple:
    """
    Reflect slab data onto the extended torus with the Stokes parities:
    ``F_j`` (j < d) and ``g`` even, ``F_d`` odd, ``f_{jk}`` odd when exactly
    one index is ``d``.

    With ``strict=False`` odd components with nonzero values at ``x_d = 0``
    or ``x_d = H`` are accepted and those samples are set to zero.
    """
    slab = rhs.grid
    if not isinstance(slab, SlabGrid):
        raise ValueError("parity_extend expects slab data")
    ext = slab.extended()
    return RhsTriple(
        Field(ext, _extend(rhs.F, slab, strict, "F")),
        Field(ext, _extend(rhs.f, slab, strict, "f")),
        Field(ext, _extend(rhs.g, slab, strict, "g")),
    )


# ---------------------------------------------------------------------------
# representation of a slab solution
# ---------------------------------------------------------------------------


def _horizontal_k(slab: SlabGrid) -> np.ndarray:
    return slab.horizontal.kvec()


def _corrector_profile(trace: np.ndarray, slab: SlabGrid, lam: complex, z: np.ndarray, order: int):
    """Horizontal coefficients of the corrector (``order``-th ``z`` derivative) at heights ``z``."""
    kh = _horizontal_k(slab)
    d = slab.d
    s = np.sqrt(np.sum(kh**2, axis=0))
    eta = np.sum(kh * trace, axis=0)
    inv_s2 = np.zeros_like(s)
    nz = s > 0
    inv_s2[nz] = 1.0 / s[nz] ** 2
    P = kh * (eta * inv_s2)

    sb = s[..., None]
    zb = z[None, :] if s.ndim == 1 else z.reshape((1,) * s.ndim + (-1,))
    zb = np.broadcast_to(zb, s.shape + (z.size,))
    sb = np.broadcast_to(sb, zb.shape)
    a = principal_sqrt(lam + sb.astype(complex) ** 2)
    Ea = np.exp(-a * zb) * (-a) ** order
    dm = m0_derivative(sb, zb, lam, order + 1)
    m = m0_derivative(sb, zb, lam, order)

    u = np.empty((d,) + zb.shape, dtype=complex)
    u[: d - 1] = -dm[None] * P[..., None] + (trace - P)[..., None] * Ea[None]
    u[d - 1] = 1j * m * eta[..., None]
    pf = np.zeros_like(s, dtype=complex)
    pf[nz] = (a[..., 0][nz] + s[nz]) / s[nz]
    p = -1j * (pf * eta)[..., None] * (-sb) ** order * np.exp(-sb * zb)
    return u, p


def boundary_corrector(h: Field, lam, slab: SlabGrid, sector: Sector = DEFAULT_SECTOR):
    """
    Solution of the homogeneous problem on the slab with trace ``(h, 0)`` at
    ``x_d = 0``; ``h`` has ``d-1`` components on the horizontal torus.

    Returns ``(u_c, p_c)`` sampled on the slab nodes.
    """
    lam = ResolventParam.of(lam)
    lam.check(sector)
    if h.grid != slab.horizontal or h.data.shape[0] != slab.d - 1:
        raise ValueError("h must have d-1 components on the slab's horizontal torus")
    hh = fwd(h.data, slab.horizontal) * slab.horizontal.band_mask()
    u, p = _corrector_profile(hh, slab, lam.lam, slab.z, 0)
    return Field(slab, bwd(u, slab)), Field(slab, bwd(p, slab))


@dataclass(frozen=True, eq=False)
class HalfSpaceSolution:
    """
    Slab solution as periodic part plus boundary corrector.

    ``torus_u``/``torus_p`` are coefficients on the extended torus and
    ``trace`` holds the horizontal coefficients of the corrector trace
    ``h = -u_periodic(., 0)``.  Iterating yields ``u`` and ``p``.
    """

    slab: SlabGrid
    lam: ResolventParam
    torus_u: np.ndarray
    torus_p: np.ndarray
    trace: np.ndarray
    info: dict = dc_field(default_factory=dict)

    # -- evaluation --------------------------------------------------------

    def profile(self, z, order: int = 0):
        """Horizontal coefficients of ``d^order/dz^order (u, p)`` at heights ``z``."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        ext = self.slab.extended()
        kz = ext.wavenumbers(ext.d - 1)
        phase = np.exp(1j * np.outer(kz, z)) * ((1j * kz) ** order)[:, None]
        ut = self.torus_u @ phase
        pt = self.torus_p @ phase
        uc, pc = _corrector_profile(self.trace, self.slab, self.lam.lam, z, order)
        return ut + uc, pt + pc

    def gradient_profile(self, z):
        """Coefficients of ``(grad u, grad p)`` at ``z``; derivative index first."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        u0, p0 = self.profile(z, 0)
        u1, p1 = self.profile(z, 1)
        kh = _horizontal_k(self.slab)[..., None]
        gu = np.concatenate([1j * kh[:, None] * u0[None], u1[None]])
        gp = np.concatenate([1j * kh * p0[None], p1[None]])
        return gu, gp

    def values(self, z, order: int = 0):
        """Physical samples ``(u, p)`` on the horizontal grid times heights ``z``."""
        u, p = self.profile(z, order)
        return bwd(u, self.slab), bwd(p, self.slab)

    @cached_property
    def u(self) -> Field:
        return Field(self.slab, self.values(self.slab.z)[0])

    @cached_property
    def p(self) -> Field:
        return Field(self.slab, self.values(self.slab.z)[1])

    def __iter__(self):
        yield self.u
        yield self.p

    # -- linear structure --------------------------------------------------

    def _combine(self, other: "HalfSpaceSolution", c: float) -> "HalfSpaceSolution":
        if other.slab != self.slab or other.lam.lam != self.lam.lam:
            raise ValueError("solutions must share slab and lambda")
        return HalfSpaceSolution(
            self.slab,
            self.lam,
            self.torus_u + c * other.torus_u,
            self.torus_p + c * other.torus_p,
            self.trace + c * other.trace,
        )

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, c):
        return HalfSpaceSolution(self.slab, self.lam, c * self.torus_u, c * self.torus_p, c * self.trace)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @classmethod
    def zeros(cls, slab: SlabGrid, lam) -> "HalfSpaceSolution":
        ext = slab.extended()
        return cls(
            slab,
            ResolventParam.of(lam),
            np.zeros((slab.d,) + ext.shape, dtype=complex),
            np.zeros(ext.shape, dtype=complex),
            np.zeros((slab.d - 1,) + slab.horizontal.shape, dtype=complex),
        )

    # -- norms -------------------------------------------------------------

    def norms(self, q: float = 2.0, quadrature: str = "nodes") -> dict:
        """
        ``L^q`` norms of ``u``, ``grad u``, ``p`` and ``grad p`` over the slab.

        ``quadrature="nodes"`` uses the trapezoid rule on the slab nodes;
        ``"gauss"`` uses composite Gauss-Legendre panels graded towards
        ``x_d = 0`` so that thin boundary layers (large ``|lam|``) are resolved.
        """
        if quadrature == "nodes":
            z, w = self.slab.z, self.slab.vertical_weights()
        elif quadrature == "gauss":
            z, w = gauss_vertical_rule(self.slab, abs(self.lam.sqrt_lam))
        else:
            raise ValueError(f"unknown quadrature {quadrature!r}")
        u0, p0 = self.profile(z, 0)
        gu, gp = self.gradient_profile(z)
        cell = self.slab.horizontal.cell_volume

        def nrm(coef, rank):
            v = np.abs(bwd(coef, self.slab))
            if rank:
                v = np.sqrt(np.sum(v**2, axis=tuple(range(rank))))
            return float((np.sum(v**q * w) * cell) ** (1.0 / q))

        return {"u": nrm(u0, 1), "grad_u": nrm(gu, 2), "p": nrm(p0, 0), "grad_p": nrm(gp, 1)}


def gauss_vertical_rule(slab: SlabGrid, boundary_rate: float = 1.0, points: int = 6):
    """
    Composite Gauss-Legendre rule on ``[0, H]``: one panel per slab interval,
    the first one split geometrically until its smallest piece is below
    ``0.1 / boundary_rate``.
    """
    h = slab.dz
    edges = list(slab.z)
    target = 0.1 / max(boundary_rate, 1e-300)
    extra = []
    w = h / 2
    while w > target and len(extra) < 40:
        extra.append(w)
        w /= 2
    edges = sorted(set(edges) | set(extra))
    x, wt = np.polynomial.legendre.leggauss(points)
    zs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        zs.append(lo + half * (x + 1))
        ws.append(half * wt)
    return np.concatenate(zs), np.concatenate(ws)


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


def _extended_coefficients(rhs: RhsTriple, strict: bool, project_mean: bool):
    slab = rhs.grid
    ext = slab.extended()
    er = parity_extend(rhs, strict=strict)
    flags = rhs.nonzero
    Fh = fwd(er.F.data, ext)
    fh = fwd(er.f.data, ext) if flags["f"] else None
    gh = None
    removed = 0.0
    if flags["g"]:
        gh = fwd(er.g.data, ext)
        zero = (0,) * ext.d
        removed = complex(gh[zero])
        if project_mean:
            if removed != 0:
                logger.info("solve_half_space: removed divergence-datum mean %.3e", abs(removed))
            gh[zero] = 0.0
        else:
            _check_mean(gh, ext, float(np.max(np.abs(er.g.data))))
    return ext, Fh, fh, gh, removed


def solve_half_space(
    rhs: RhsTriple,
    lam,
    sector: Sector = DEFAULT_SECTOR,
    strict: bool = True,
    project_mean: bool = False,
) -> HalfSpaceSolution:
    """
    Solve ``-Lap u + grad p + lam u = F + div f``, ``div u = g`` on the slab
    with ``u = 0`` at ``x_d = 0``.

    Parameters
    ----------
    rhs : RhsTriple
        Data on a :class:`SlabGrid`.
    lam : complex
        Spectral parameter in ``sector``.
    strict : bool
        Reject data whose odd reflection would jump at ``x_d = 0`` or
        ``x_d = H``.  When False those boundary samples are ignored.
    project_mean : bool
        Remove the mean of the reflected ``g`` instead of rejecting it.

    Returns
    -------
    HalfSpaceSolution
        Unpacks as ``u, p``.
    """
    lam = ResolventParam.of(lam)
    lam.check(sector)
    if not isinstance(rhs.grid, SlabGrid):
        raise ValueError("solve_half_space expects slab data")
    slab = rhs.grid
    ext, Fh, fh, gh, removed = _extended_coefficients(rhs, strict, project_mean)
    uh, ph = solve_coefficients(Fh, fh, gh, ext, lam.lam)
    trace = -np.sum(uh[: slab.d - 1], axis=-1)
    info = {"g_mean_removed": abs(removed) if project_mean else 0.0}
    return HalfSpaceSolution(slab, lam, uh, ph, trace, info)


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------


def resolved_data(rhs: RhsTriple, strict: bool = True, project_mean: bool = False):
    """
    ``(F + div f, g)`` on the slab nodes as seen by the solver: reflected,
    restricted to the resolved band, and with the ``g`` mean removed when
    ``project_mean``.
    """
    slab = rhs.grid
    ext, Fh, fh, gh, _ = _extended_coefficients(rhs, strict, project_mean)
    band = ext.band_mask()
    k = ext.kvec()
    V = Fh.copy()
    if fh is not None:
        V += np.einsum("l...,lk...->k...", 1j * k, fh)
    V = bwd(V * band, ext)[..., : slab.n_vertical]
    G = np.zeros(slab.shape, dtype=complex)
    if gh is not None:
        G = bwd(gh * band, ext)[..., : slab.n_vertical]
    return Field(slab, V), Field(slab, G)


def slab_residual(
    sol: HalfSpaceSolution,
    rhs: RhsTriple,
    route: str = "exact",
    strict: bool = True,
    project_mean: bool = False,
):
    """
    ``(-Lap u + grad p + lam u - F - div f, div u - g)`` on the slab nodes.

    ``route="exact"`` differentiates the solution representation exactly and
    compares with :func:`resolved_data`.  ``route="fd4"`` applies fourth-order
    vertical finite differences to the sampled ``u``, ``p`` and ``f``; its
    accuracy is limited by the vertical resolution.
    """
    slab = sol.slab
    if rhs.grid != slab:
        raise ValueError("residual: data and solution must share one slab")
    lam = sol.lam.lam
    d = slab.d
    if route == "exact":
        z = slab.z
        u0, p0 = sol.profile(z, 0)
        u1, p1 = sol.profile(z, 1)
        u2, _ = sol.profile(z, 2)
        kh = _horizontal_k(slab)[..., None]
        k2 = np.sum(kh**2, axis=0)
        lap = u2 - k2 * u0
        gp = np.concatenate([1j * kh * p0[None], p1[None]])
        mom = bwd(-lap + gp + lam * u0, slab)
        div = bwd(np.sum(1j * kh * u0[: d - 1], axis=0) + u1[d - 1], slab)
        V, G = resolved_data(rhs, strict, project_mean)
        return Field(slab, mom - V.data), Field(slab, div - G.data)
    if route == "fd4":
        u, p = sol.u, sol.p

        def dd(arr, axis, order=1):
            f = Field(slab, arr)
            if axis == d - 1:
                return vertical_derivative_fd4(f, order).data
            out = f
            for _ in range(order):
                out = spectral_derivative(out, axis)
            return out.data

        lap = np.stack([sum(dd(u.data[c], a, 2) for a in range(d)) for c in range(d)])
        gp = np.stack([dd(p.data, a) for a in range(d)])
        divf = np.stack([sum(dd(rhs.f.data[a, c], a) for a in range(d)) for c in range(d)])
        mom = -lap + gp + lam * u.data - rhs.F.data - divf
        div = sum(dd(u.data[a], a) for a in range(d)) - rhs.g.data
        return Field(slab, mom), Field(slab, div)
    raise ValueError(f"unknown residual route {route!r}")


def _operator_scales(sol: HalfSpaceSolution, V: np.ndarray, G: np.ndarray, keep: slice):
    slab = sol.slab
    z = slab.z[keep]
    u0, _ = sol.profile(z, 0)
    u2, _ = sol.profile(z, 2)
    gu, gp = sol.gradient_profile(z)
    kh = _horizontal_k(slab)[..., None]

    def mx(coef):
        return float(np.max(np.abs(bwd(coef, slab)), initial=0.0))

    mom_scale = (
        mx(u2)
        + mx(np.sum(kh**2, axis=0) * u0)
        + mx(gp)
        + abs(sol.lam.lam) * mx(u0)
        + float(np.max(np.abs(V[..., keep]), initial=0.0))
    )
    div_scale = sum(mx(gu[j, j]) for j in range(slab.d)) + float(
        np.max(np.abs(G[..., keep]), initial=0.0)
    )
    return mom_scale, div_scale


def _relative(mom, div, scales, keep):
    m = float(np.max(np.abs(mom[..., keep])))
    v = float(np.max(np.abs(div[..., keep])))
    ms, ds = scales
    return (m / ms if ms else m), (v / ds if ds else v)


def operator_residual(sol: HalfSpaceSolution, V: Field, G: Field, skip_top: int = 0):
    """
    Relative max-norm residual of ``S0 (u, p) = (V, G)`` where ``S0`` is the
    slab Stokes operator and ``V``/``G`` are nodal momentum/divergence data.

    Derivatives of the solution are exact (see :func:`slab_residual`).
    Returns ``(momentum, divergence)``.
    """
    zero = RhsTriple(grid=sol.slab)
    mom, div = slab_residual(sol, zero, "exact")
    keep = slice(0, sol.slab.n_vertical - skip_top)
    scales = _operator_scales(sol, V.data, G.data, keep)
    return _relative(mom.data - V.data, div.data - G.data, scales, keep)


def relative_slab_residual(
    sol: HalfSpaceSolution,
    rhs: RhsTriple,
    route: str = "exact",
    skip_top: int = 2,
    strict: bool = True,
    project_mean: bool = False,
):
    """
    Max-norm residuals relative to the size of the terms entering them,
    over the slab nodes minus the top ``skip_top`` layers.

    Returns ``(momentum, divergence)``.
    """
    V, G = resolved_data(rhs, strict, project_mean)
    if route == "exact":
        return operator_residual(sol, V, G, skip_top)
    mom, div = slab_residual(sol, rhs, route, strict, project_mean)
    keep = slice(0, sol.slab.n_vertical - skip_top)
    scales = _operator_scales(sol, V.data, G.data, keep)
    return _relative(mom.data, div.data, scales, keep)


# ---------------------------------------------------------------------------
# kernel decay probe
# ---------------------------------------------------------------------------


def _unit_directions(n: int) -> list:
    if n == 1:
        return [np.array([1.0])]
    angles = np.linspace(0.0, math.pi / 2, 5)
    return [np.array([math.cos(t), math.sin(t)]) for t in angles]


def _multi_indices(n: int, order: int):
    if n == 1:
        return [(k,) for k in range(order + 1)]
    return [(i, j) for i in range(order + 1) for j in range(order + 1 - i)]


def _fd_derivative(fun, xi: np.ndarray, alpha: Sequence[int], step: float):
    """Central finite difference of ``fun`` at ``xi`` for multi-index ``alpha``."""
    if sum(alpha) == 0:
        return fun(xi)
    ax = next(i for i, a in enumerate(alpha) if a)
    rest = list(alpha)
    rest[ax] -= 1
    e = np.zeros_like(xi)
    e[ax] = step
    return (_fd_derivative(fun, xi + e, rest, step) - _fd_derivative(fun, xi - e, rest, step)) / (2 * step)


def kernel_decay_probe(
    lam,
    delta: float,
    s_samples: Optional[Sequence[float]] = None,
    z_samples: Optional[Sequence[float]] = None,
    d: int = 2,
    kernel=None,
    max_order: Optional[int] = None,
) -> float:
    """
    Sampled ``sup |s^|alpha| D^alpha m(xi', x_d)| (1 + x_d) e^{delta s x_d}``.

    ``m`` ranges over the entries of the velocity corrector symbol (the
    composite kernels mapping the trace to ``u``) unless a scalar or array
    valued ``kernel(xi, z)`` is supplied.  Derivatives in ``xi'`` are taken
    by central differences up to order ``[(d-1)/2] + 1``.
    """
    lam = ResolventParam.of(lam)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    s_samples = np.linspace(0.05, 16.0, 64) if s_samples is None else np.asarray(s_samples, float)
    z_samples = np.linspace(0.0, 8.0, 65) if z_samples is None else np.asarray(z_samples, float)
    n = d - 1
    order = (d - 1) // 2 + 1 if max_order is None else max_order
    if kernel is None:

        def kernel(xi, z):
            return corrector_symbol(xi, z, lam.lam)[0]

    best = 0.0
    for s in s_samples:
        step = 1e-4 * max(s, 1e-2)
        for w in _unit_directions(n):
            xi = s * w
            for z in z_samples:
                weight = (1.0 + z) * math.exp(delta * s * z)
                for alpha in _multi_indices(n, order):
                    if s == 0 and sum(alpha):
                        continue
                    val = _fd_derivative(lambda x: np.asarray(kernel(x, z)), xi, alpha, step)
                    best = max(best, float(np.max(np.abs(val))) * s ** sum(alpha) * weight)
    return best
