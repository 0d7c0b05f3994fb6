"""
Stokes resolvent problem above a small-Lipschitz graph ``x_d > psi(x')``.

The change of variables ``z = x_d - psi(x')`` maps the domain onto the
slab; ``u~(x', z) = u(x', z + psi(x'))`` then satisfies

    S0 (u~, p~) + R (u~, p~) = (F + div f, g)

where ``S0`` is the flat slab operator and ``R`` collects every term that
carries a derivative of ``psi``.  ``R`` is stored in divergence form as a
data triple ``(0, f_R, g_R)``:

    f_R[d, j] = d_k u~_j d_k psi - d_d u~_j |grad' psi|^2 - p~ d_j psi   (j < d)
    f_R[d, d] = d_k u~_d d_k psi - d_d u~_d |grad' psi|^2
    f_R[k, j] = d_d u~_j d_k psi                                         (k < d)
    g_R       = -d_d u~_k d_k psi

(sums over ``k < d``).  The system is inverted by the fixed-point iteration
``x_{n+1} = x_0 - S0^{-1} R x_n`` with ``x_0 = S0^{-1} y``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import List, Optional

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
    fwd,
)
from .halfspace import (
    HalfSpaceSolution,
    _corrector_profile,
    operator_residual,
    resolved_data,
    solve_half_space,
)

logger = logging.getLogger(__name__)

__all__ = [
    "GraphProfile",
    "IterationLog",
    "GraphSolution",
    "ScaleRecord",
    "NeumannDivergenceError",
    "ConvergenceError",
    "remainder_apply",
    "solve_graph",
    "rescale_to_unit",
    "contraction_probe",
    "band_project",
    "x_norm",
    "flattened_residual",
    "pullback",
]

LIP_REFUSE = 0.25
LIP_WARN = 0.1


class NeumannDivergenceError(RuntimeError):
    """The fixed-point iteration grew for three consecutive steps."""

    def __init__(self, message, rho):
        super().__init__(message)
        self.rho = rho


class ConvergenceError(RuntimeError):
    """``max_iter`` was reached before the stopping rule was met."""


# ---------------------------------------------------------------------------
# horizontal padding for products
# ---------------------------------------------------------------------------


def _haxes(ndim: int, nh: int):
    return tuple(range(ndim - nh - 1, ndim - 1))


def _pad(c: np.ndarray, nh: int, sizes) -> np.ndarray:
    """Zero-pad horizontal coefficients to ``sizes``; the Nyquist row is dropped."""
    for ax, M in zip(_haxes(c.ndim, nh), sizes):
        n = c.shape[ax]
        h = n // 2
        lo = np.take(c, np.arange(0, h), axis=ax)
        hi = np.take(c, np.arange(h + 1, n), axis=ax)
        zshape = list(c.shape)
        zshape[ax] = M - (n - 1)
        c = np.concatenate([lo, np.zeros(zshape, dtype=c.dtype), hi], axis=ax)
    return c


def _truncate(c: np.ndarray, nh: int, sizes) -> np.ndarray:
    """Inverse of :func:`_pad`; the Nyquist row comes back as zero."""
    for ax, n in zip(_haxes(c.ndim, nh), sizes):
        M = c.shape[ax]
        h = n // 2
        lo = np.take(c, np.arange(0, h), axis=ax)
        hi = np.take(c, np.arange(M - h + 1, M), axis=ax)
        zshape = list(c.shape)
        zshape[ax] = 1
        c = np.concatenate([lo, np.zeros(zshape, dtype=c.dtype), hi], axis=ax)
    return c


def _product(coefs: list, shape: tuple) -> np.ndarray:
    """
    Horizontal coefficients of the pointwise product of the given factors.

    Each factor is padded by ``(p + 1)/2`` (``p`` factors) per horizontal
    axis before multiplying, which removes aliasing from the band-limited
    product (the 3/2 rule for two factors).
    """
    nh = len(shape)
    p = len(coefs)
    sizes = [int(math.ceil(n * (p + 1) / 2 / 2)) * 2 for n in shape]
    total = float(np.prod(sizes))
    out = None
    for c in coefs:
        ax = _haxes(c.ndim, nh)
        v = np.fft.ifftn(_pad(c, nh, sizes), axes=ax) * total
        out = v if out is None else out * v
    ax = _haxes(out.ndim, nh)
    return _truncate(np.fft.fftn(out, axes=ax) / total, nh, shape)


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GraphProfile:
    """
    Real band-limited graph height ``psi`` on the horizontal torus.

    ``lip`` is ``max |grad' psi|`` sampled on a 4x spectrally refined grid.
    """

    grid: TorusGrid
    psi: np.ndarray
    grad: np.ndarray = dc_field(init=False, repr=False)
    lip: float = dc_field(init=False)
    label: str = "custom"

    def __post_init__(self):
        psi = np.asarray(self.psi)
        if psi.shape != self.grid.shape:
            raise ValueError("psi must be sampled on the horizontal grid")
        if np.iscomplexobj(psi):
            if np.max(np.abs(psi.imag), initial=0.0) > 1e-14 * max(1.0, np.max(np.abs(psi))):
                raise ValueError("psi must be real")
            psi = psi.real
        psi = np.array(psi, dtype=float)
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        c = fwd(psi, self.grid) * self.grid.band_mask()
        k = self.grid.kvec()
        grad = bwd(1j * k * c, self.grid).real
        grad.setflags(write=False)
        object.__setattr__(self, "grad", grad)
        object.__setattr__(self, "lip", self._refined_lip(c, k))

    def _refined_lip(self, c: np.ndarray, k: np.ndarray) -> float:
        fine = tuple(4 * n for n in self.grid.shape)
        gc = 1j * k * c
        # horizontal axes are the trailing ones; add a dummy vertical axis
        big = _pad(gc[..., None], self.grid.d, fine)
        total = float(np.prod(fine))
        v = np.fft.ifftn(big, axes=_haxes(big.ndim, self.grid.d)) * total
        return float(np.max(np.sqrt(np.sum(np.abs(v) ** 2, axis=0))))

    @property
    def coefficients(self) -> np.ndarray:
        return fwd(self.psi, self.grid) * self.grid.band_mask()

    @classmethod
    def from_cosine(cls, grid: TorusGrid, amplitude: float, wavenumber: int = 1, axis: int = 0):
        """``psi = amplitude cos(wavenumber * 2 pi x_axis / L)``, so ``lip = amplitude * wavenumber`` on the default period."""
        x = grid.mesh()[axis]
        k = wavenumber * 2 * math.pi / grid.lengths[axis]
        return cls(grid, amplitude * np.cos(k * x), label=f"cosine(a={amplitude:g},k={wavenumber})")

    @classmethod
    def with_lip(cls, grid: TorusGrid, lip: float, wavenumber: int = 1, axis: int = 0):
        k = wavenumber * 2 * math.pi / grid.lengths[axis]
        return cls.from_cosine(grid, lip / k, wavenumber, axis)

    @classmethod
    def flat(cls, grid: TorusGrid):
        return cls(grid, np.zeros(grid.shape), label="flat")

    def scaled(self, c: float) -> "GraphProfile":
        return GraphProfile(self.grid, c * self.psi, label=f"{c:g}*{self.label}")

    def dilated(self, mu: float) -> "GraphProfile":
        """``psi'(x') = mu psi(x'/mu)`` on the grid dilated by ``mu``."""
        return GraphProfile(self.grid.scaled(mu), mu * self.psi, label=self.label)

    def describe(self) -> dict:
        return {"label": self.label, "lip": self.lip, "grid": self.grid.describe()}


# ---------------------------------------------------------------------------
# remainder
# ---------------------------------------------------------------------------


def remainder_apply(state: HalfSpaceSolution, psi: GraphProfile) -> RhsTriple:
    """
    Remainder terms of the flattened problem as a data triple
    ``(0, f_R, g_R)`` on the slab nodes (see the module docstring).
    """
    slab = state.slab
    if psi.grid != slab.horizontal:
        raise ValueError("psi and state must share the horizontal grid")
    d = slab.d
    nh = d - 1
    shape = slab.horizontal.shape
    zero = RhsTriple(grid=slab)
    if not np.any(psi.psi):
        return zero
    z = slab.z
    u0, p0 = state.profile(z, 0)
    gu, _ = state.gradient_profile(z)
    k = slab.horizontal.kvec()
    pc = psi.coefficients
    dpsi = [(1j * k[i] * pc)[..., None] for i in range(nh)]
    grad2 = sum(_product([dpsi[i], dpsi[i]], shape) for i in range(nh))

    f = np.zeros((d, d) + slab.shape, dtype=complex)
    for j in range(d):
        acc = sum(_product([gu[i, j], dpsi[i]], shape) for i in range(nh))
        acc = acc - _product([gu[d - 1, j], grad2], shape)
        if j < d - 1:
            acc = acc - _product([p0, dpsi[j]], shape)
        f[d - 1, j] = bwd(acc, slab)
        for i in range(nh):
            f[i, j] = bwd(_product([gu[d - 1, j], dpsi[i]], shape), slab)
    g = -sum(bwd(_product([gu[d - 1, i], dpsi[i]], shape), slab) for i in range(nh))
    return RhsTriple(Field(slab, np.zeros((d,) + slab.shape)), Field(slab, f), Field(slab, g))


def _solve_remainder(T: RhsTriple, lam, sector) -> HalfSpaceSolution:
    return solve_half_space(T, lam, sector, strict=False, project_mean=True)


# ---------------------------------------------------------------------------
# norms and residuals
# ---------------------------------------------------------------------------


def x_norm(state: HalfSpaceSolution, q: float = 2.0) -> float:
    """``max(||grad u||_q + ||u||_q, min(||p||_q, ||grad p||_q))`` on the slab nodes."""
    n = state.norms(q)
    return max(n["grad_u"] + n["u"], min(n["p"], n["grad_p"]))


def flattened_residual(
    state: HalfSpaceSolution, rhs: RhsTriple, psi: GraphProfile, remainder: Optional[RhsTriple] = None
):
    """
    Relative residual of ``S0 x + R x = y`` on the slab nodes, with the data
    seen through the same reflection and band restriction as the solver.

    Returns ``(momentum, divergence)``.
    """
    T = remainder if remainder is not None else remainder_apply(state, psi)
    Vy, Gy = resolved_data(rhs)
    Vt, Gt = resolved_data(T, strict=False, project_mean=True)
    return operator_residual(state, Vy - Vt, Gy - Gt)


# ---------------------------------------------------------------------------
# rescaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleRecord:
    """Undo data for the dilation ``x -> |lam|^{1/2} x``."""

    mu: float
    slab: SlabGrid
    scaled_slab: SlabGrid
    lam: complex

    def undo(self, u: Field, p: Field):
        """Map ``(v, phi)`` on the dilated slab back to ``(u, p)``."""
        return Field(self.slab, u.data), Field(self.slab, self.mu * p.data)

    def undo_rhs(self, rhs: RhsTriple) -> RhsTriple:
        mu = self.mu
        return rhs.scaled(mu**2, mu, mu, grid=self.slab)


def rescale_to_unit(rhs: RhsTriple, lam, psi: GraphProfile):
    """
    Dilate the problem so that ``|lam'| = 1``.

    With ``mu = |lam|^{1/2}`` the grid periods and height grow by ``mu``,
    ``F' = F/mu^2``, ``f' = f/mu``, ``g' = g/mu``, ``psi'(x') = mu psi(x'/mu)``
    and ``lam' = lam/|lam|``.  Samples of ``u`` are unchanged and ``p``
    gains a factor ``mu`` on the way back.

    Returns ``(rhs', lam', psi', record)``.
    """
    lam = ResolventParam.of(lam).lam
    slab = rhs.grid
    mu = math.sqrt(abs(lam))
    if mu == 1.0:
        return rhs, lam, psi, ScaleRecord(1.0, slab, slab, lam)
    scaled = slab.scaled(mu)
    rhs2 = rhs.scaled(1.0 / mu**2, 1.0 / mu, 1.0 / mu, grid=scaled)
    return rhs2, lam / abs(lam), psi.dilated(mu), ScaleRecord(mu, slab, scaled, lam)


# ---------------------------------------------------------------------------
# iteration
# ---------------------------------------------------------------------------


@dataclass
class IterationLog:
    residuals: List[tuple] = dc_field(default_factory=list)
    updates: List[float] = dc_field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.updates)

    @property
    def ratios(self) -> List[float]:
        u = self.updates
        return [u[i] / u[i - 1] for i in range(1, len(u)) if u[i - 1] > 0]

    @property
    def rho(self) -> float:
        """Geometric mean of successive update ratios after step 2."""
        u = self.updates
        r = [u[i] / u[i - 1] for i in range(2, len(u)) if u[i - 1] > 0 and u[i] > 0]
        if not r:
            r = [x for x in self.ratios if x > 0]
        if not r:
            return 0.0
        return float(np.exp(np.mean(np.log(r))))

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "updates": list(self.updates),
            "residuals": [list(r) for r in self.residuals],
            "rho": self.rho,
            "converged": self.converged,
        }


@dataclass(frozen=True, eq=False)
class GraphSolution:
    """
    Flattened-chart solution.  ``state`` lives on the (possibly dilated)
    working slab; ``u``/``p`` are returned on the caller's slab.
    """

    state: HalfSpaceSolution
    log: IterationLog
    psi: GraphProfile
    record: ScaleRecord
    rhs: RhsTriple

    @property
    def lam(self) -> complex:
        """Spectral parameter of the working (possibly dilated) problem."""
        return self.state.lam.lam

    @property
    def u(self) -> Field:
        return self.record.undo(self.state.u, self.state.p)[0]

    @property
    def p(self) -> Field:
        return self.record.undo(self.state.u, self.state.p)[1]

    def __iter__(self):
        yield self.u
        yield self.p
        yield self.log

    def pullback(self, heights):
        """Physical ``(u, p)`` at ``(x', x_d)`` for the given ``x_d`` values; see :func:`pullback`."""
        mu = self.record.mu
        u, p = pullback(self.state, self.psi, np.asarray(heights, dtype=float) * mu)
        return u, mu * p


def _check_lip(psi: GraphProfile, refuse: float, warn: float) -> None:
    if psi.lip > refuse:
        raise ValueError(f"lip(psi) = {psi.lip:.4g} exceeds the smallness guard {refuse}")
    if psi.lip > warn:
        warnings.warn(
            f"lip(psi) = {psi.lip:.4g} is above {warn}; convergence is not guaranteed",
            RuntimeWarning,
            stacklevel=3,
        )


def solve_graph(
    rhs: RhsTriple,
    lam,
    psi: GraphProfile,
    tol: float = 1e-10,
    max_iter: int = 200,
    sector: Sector = DEFAULT_SECTOR,
    rescale: bool = True,
    lip_refuse: float = LIP_REFUSE,
    lip_warn: float = LIP_WARN,
    q: float = 2.0,
) -> GraphSolution:
    """
    Solve the flattened graph-domain problem by fixed-point iteration.

    Parameters
    ----------
    rhs : RhsTriple
        Data on the slab chart.
    lam : complex
        Spectral parameter in ``sector``.
    psi : GraphProfile
        Graph height on the slab's horizontal torus.
    tol : float
        Stop when an update norm drops below ``tol`` times the first one.
        ``tol = 0`` runs exactly ``max_iter`` iterations.
    rescale : bool
        Work on the dilated problem with ``|lam| = 1``.

    Raises
    ------
    NeumannDivergenceError
        Update norms grew three times in a row.
    ConvergenceError
        ``max_iter`` reached with ``tol > 0``.
    """
    lam = ResolventParam.of(lam)
    lam.check(sector)
    if psi.grid != rhs.grid.horizontal:
        raise ValueError("psi must live on the slab's horizontal grid")
    _check_lip(psi, lip_refuse, lip_warn)
    if rescale:
        y, lam_w, psi_w, record = rescale_to_unit(rhs, lam.lam, psi)
    else:
        y, lam_w, psi_w, record = rhs, lam.lam, psi, ScaleRecord(1.0, rhs.grid, rhs.grid, lam.lam)

    log = IterationLog()
    x0 = solve_half_space(y, lam_w, sector)
    x = x0
    T = remainder_apply(x, psi_w)
    first = None
    for n in range(1, max_iter + 1):
        x_new = x0 - _solve_remainder(T, lam_w, sector)
        e = x_norm(x_new - x, q)
        x = x_new
        T = remainder_apply(x, psi_w)
        log.updates.append(e)
        log.residuals.append(flattened_residual(x, y, psi_w, T))
        if first is None:
            first = e
        if tol > 0 and e <= tol * first:
            log.converged = True
            break
        u = log.updates
        if (
            len(u) >= 4
            and u[-1] > 1e-12 * first
            and u[-1] > u[-2] > u[-3] > u[-4]
        ):
            raise NeumannDivergenceError(
                f"fixed-point iteration diverges; estimated ||S0^-1 R|| >= 1 (rho = {log.rho:.3g})",
                log.rho,
            )
    else:
        if tol > 0:
            raise ConvergenceError(f"no convergence in {max_iter} iterations (rho = {log.rho:.3g})")
        log.converged = True
    logger.info("solve_graph: %d iterations, rho = %.4g", log.iterations, log.rho)
    return GraphSolution(x, log, psi_w, record, y)


def band_project(state: HalfSpaceSolution, band: int = 4) -> HalfSpaceSolution:
    """
    Keep the extended-torus modes with ``|index| <= n // band`` on every axis
    and rebuild the trace, so the result still vanishes at ``z = 0``.
    """
    ext = state.slab.extended()
    idx = np.meshgrid(*[ext.index_wavenumbers(a) for a in range(ext.d)], indexing="ij")
    mask = np.logical_and.reduce([np.abs(k) <= n // band for k, n in zip(idx, ext.shape)])
    tu = state.torus_u * mask
    tp = state.torus_p * mask
    trace = -np.sum(tu[: state.slab.d - 1], axis=-1)
    return HalfSpaceSolution(state.slab, state.lam, tu, tp, trace)


def contraction_probe(
    psi: GraphProfile,
    lam,
    n_probes: int = 3,
    slab: Optional[SlabGrid] = None,
    iterations: int = 16,
    seed: int = 0,
    q: float = 2.0,
    band: Optional[int] = 4,
) -> float:
    """
    Power-iteration estimate of the spectral radius of ``S0^{-1} R`` on
    random band-limited states.

    Each iterate is projected back onto the band ``|index| <= n // band``
    (``band=None`` disables this).  Grid-scale modes are left out because
    band-limited data excite them only at round-off level, and
    their growth rate depends on the vertical resolution.  The estimate
    for one start is the geometric mean of the norm ratios over the second
    half of the iterations.  The largest estimate over ``n_probes`` starts
    is returned.
    """
    from .data import random_slab_rhs

    lam = ResolventParam.of(lam)
    slab = slab or SlabGrid(psi.grid, 65, 8.0)
    if slab.horizontal != psi.grid:
        raise ValueError("slab and psi must share the horizontal grid")
    if not np.any(psi.psi):
        return 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_probes):
        x = solve_half_space(random_slab_rhs(slab, rng, spectrum="smooth"), lam)
        x = x * (1.0 / x_norm(x, q))
        logs = []
        for _ in range(iterations):
            y = _solve_remainder(remainder_apply(x, psi), lam, DEFAULT_SECTOR)
            if band is not None:
                y = band_project(y, band)
            ny = x_norm(y, q)
            if ny == 0:
                logs = [-np.inf]
                break
            logs.append(math.log(ny))
            x = y * (1.0 / ny)
        tail = logs[len(logs) // 2 :]
        best = max(best, float(np.exp(np.mean(tail))))
    return best


# ---------------------------------------------------------------------------
# pullback
# ---------------------------------------------------------------------------


def pullback(state: HalfSpaceSolution, psi: GraphProfile, heights, chunk: int = 64):
    """
    ``u(x', x_d) = u~(x', x_d - psi(x'))`` on the horizontal grid times the
    physical heights ``heights``.

    The representation is summed exactly at the shifted heights.  Points
    below the graph or above the slab top are returned as NaN.
    """
    slab = state.slab
    heights = np.atleast_1d(np.asarray(heights, dtype=float))
    d = slab.d
    hshape = slab.horizontal.shape
    npts = int(np.prod(hshape))
    zz = heights[None, :] - psi.psi.reshape(-1)[:, None]
    inside = (zz >= 0) & (zz <= slab.height)
    zc = np.clip(zz, 0.0, slab.height)

    ext = slab.extended()
    kz = ext.wavenumbers(ext.d - 1)
    hg = _haxes(state.torus_u.ndim, d - 1)
    Tu = (np.fft.ifftn(state.torus_u, axes=hg) * npts).reshape(d, npts, -1)
    hgp = _haxes(state.torus_p.ndim, d - 1)
    Tp = (np.fft.ifftn(state.torus_p, axes=hgp) * npts).reshape(npts, -1)
    phase = np.exp(1j * zc[..., None] * kz)
    u = np.einsum("cjk,jhk->cjh", Tu, phase)
    p = np.einsum("jk,jhk->jh", Tp, phase)

    X = slab.horizontal.mesh().reshape(d - 1, -1)
    k = slab.horizontal.kvec().reshape(d - 1, -1)
    for start in range(0, npts, chunk):
        sl = slice(start, min(start + chunk, npts))
        zf = zc[sl].reshape(-1)
        uc, pc = _corrector_profile(state.trace, slab, state.lam.lam, zf, 0)
        uc = uc.reshape(d, npts, sl.stop - sl.start, heights.size)
        pc = pc.reshape(npts, sl.stop - sl.start, heights.size)
        e = np.exp(1j * (k.T @ X[:, sl]))
        u[:, sl] += np.einsum("cmjh,mj->cjh", uc, e)
        p[sl] += np.einsum("mjh,mj->jh", pc, e)
    u = np.where(inside[None], u, np.nan)
    p = np.where(inside, p, np.nan)
    return u.reshape((d,) + hshape + (heights.size,)), p.reshape(hshape + (heights.size,))
