"""
Stokes resolvent problem on the periodic torus (surrogate for R^d).

    -Lap u + grad p + lam u = F + div f,      div u = g.

The velocity/pressure pair is obtained mode by mode.  With
``V = F^ + i xi_l f^_{l.}``::

    u^ = (lam + |xi|^2)^{-1} (I - xi xi^T/|xi|^2) V
    p^ = -i xi . V / |xi|^2

and, for the divergence datum, ``Lap G = g``, ``u = grad G``,
``p = g - lam G``.  The zero mode carries ``u^ = F^(0)/lam`` and ``p^ = 0``.
Modes with a Nyquist index are outside the resolved band and are returned
as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .field import (
    DEFAULT_SECTOR,
    Field,
    ResolventParam,
    RhsTriple,
    Sector,
    TorusGrid,
    bwd,
    fwd,
    spectral_derivative,
)

__all__ = [
    "WholeSpaceSolution",
    "stokes_multiplier",
    "solve_whole_space",
    "poisson_solve",
    "leray_project",
    "residual",
    "relative_residual",
    "divergence",
    "gradient",
]

MEAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WholeSpaceSolution:
    u: Field
    p: Field
    lam: ResolventParam
    flags: dict
    u_hat: np.ndarray
    p_hat: np.ndarray

    @property
    def grid(self) -> TorusGrid:
        return self.u.grid


def stokes_multiplier(xi, lam):
    """
    Symbol of the resolvent at one frequency.

    Returns ``(U, P)`` with ``u^ = U @ V`` and ``p^ = P @ V`` where
    ``V = F^ + i xi_l f^_{l.}``.
    """
    lam = ResolventParam.of(lam).lam
    xi = np.asarray(xi, dtype=float)
    d = xi.size
    k2 = float(xi @ xi)
    if k2 == 0.0:
        return np.eye(d, dtype=complex) / lam, np.zeros(d, dtype=complex)
    proj = np.eye(d) - np.outer(xi, xi) / k2
    return proj / (lam + k2), -1j * xi / k2


def _inverse_k2(k2: np.ndarray) -> np.ndarray:
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = 1.0 / k2[nz]
    return inv


def _check_mean(gh: np.ndarray, grid: TorusGrid, scale: float) -> None:
    null = grid.k2() == 0
    null &= grid.band_mask()
    bad = np.max(np.abs(gh[null]), initial=0.0)
    if bad > MEAN_TOL * max(scale, 1.0):
        raise ValueError(f"divergence datum g must have zero mean on the torus (mean = {bad:.3e})")


def solve_coefficients(Fh, fh, gh, grid: TorusGrid, lam: complex):
    """Mode-wise solve on coefficient arrays; shared with the half-space solver."""
    k = grid.kvec()
    k2 = np.sum(k**2, axis=0)
    inv = _inverse_k2(k2)
    band = grid.band_mask()

    V = np.array(Fh, dtype=complex, copy=True)
    if fh is not None:
        V += np.einsum("l...,lk...->k...", 1j * k, fh)
    kV = np.sum(k * V, axis=0)
    uh = (V - k * (kV * inv)) / (lam + k2)
    ph = -1j * kV * inv

    if gh is not None:
        G = -gh * inv
        uh = uh + 1j * k * G
        ph = ph + gh - lam * G

    uh = np.where(band, uh, 0.0)
    ph = np.where(band, ph, 0.0)
    return uh, ph


def solve_whole_space(
    rhs: RhsTriple,
    lam,
    grid: Optional[TorusGrid] = None,
    sector: Sector = DEFAULT_SECTOR,
) -> WholeSpaceSolution:
    """
    Solve the resolvent problem for data ``rhs`` on a torus.

    The result is the superposition of the ``(F, f, 0)`` solve and the
    ``(0, 0, g)`` construction through ``Lap G = g``.

    Raises
    ------
    ValueError
        If ``lam`` lies outside ``sector`` or ``g`` has a nonzero mean.
    """
    lam = ResolventParam.of(lam)
    lam.check(sector)
    grid = grid or rhs.grid
    if not isinstance(grid, TorusGrid) or rhs.grid != grid:
        raise ValueError("solve_whole_space needs data on the given torus grid")
    flags = rhs.nonzero
    Fh = fwd(rhs.F.data, grid)
    fh = fwd(rhs.f.data, grid) if flags["f"] else None
    gh = None
    if flags["g"]:
        gh = fwd(rhs.g.data, grid)
        _check_mean(gh, grid, float(np.max(np.abs(rhs.g.data))))
    uh, ph = solve_coefficients(Fh, fh, gh, grid, lam.lam)
    return WholeSpaceSolution(
        u=Field(grid, bwd(uh, grid)),
        p=Field(grid, bwd(ph, grid)),
        lam=lam,
        flags=flags,
        u_hat=uh,
        p_hat=ph,
    )


def poisson_solve(g: Field) -> Field:
    """``G`` with ``Lap G = g`` and zero mean; ``g`` itself must be mean-zero."""
    grid = g.grid
    gh = fwd(g.data, grid)
    _check_mean(gh, grid, float(np.max(np.abs(g.data), initial=0.0)))
    return Field(grid, bwd(-gh * _inverse_k2(grid.k2()), grid))


def leray_project(F: Field) -> Field:
    """Divergence-free part of ``F``; the zero mode passes through unchanged."""
    grid = F.grid
    k = grid.kvec()
    inv = _inverse_k2(np.sum(k**2, axis=0))
    Fh = fwd(F.data, grid)
    Ph = Fh - k * (np.sum(k * Fh, axis=0) * inv)
    return Field(grid, bwd(Ph, grid))


def gradient(v: Field) -> Field:
    """``out[j, ...] = d_j v[...]``; derivative index first."""
    d = v.grid.d
    return Field(v.grid, np.stack([spectral_derivative(v, j).data for j in range(d)]))


def divergence(v: Field) -> Field:
    """``sum_j d_j v[j, ...]`` (first index contracted)."""
    d = v.grid.d
    out = sum(spectral_derivative(Field(v.grid, v.data[j]), j).data for j in range(d))
    return Field(v.grid, out)


def residual(u: Field, p: Field, rhs: RhsTriple, lam):
    """
    ``(-Lap u + grad p + lam u - F - div f,  div u - g)``.

    Built only from :func:`spectral_derivative`, independently of the
    multiplier formulas used by the solver.
    """
    if not (u.grid == p.grid == rhs.grid):
        raise ValueError("residual: fields must share one grid")
    lam = ResolventParam.of(lam).lam
    d = u.grid.d
    lap = np.zeros_like(u.data)
    for j in range(d):
        for c in range(d):
            lap[c] += spectral_derivative(spectral_derivative(Field(u.grid, u.data[c]), j), j).data
    gp = gradient(p).data
    divf = np.stack([divergence(Field(u.grid, rhs.f.data[:, c])).data for c in range(d)])
    mom = -lap + gp + lam * u.data - rhs.F.data - divf
    div = divergence(u).data - rhs.g.data
    return Field(u.grid, mom), Field(u.grid, div)


def relative_residual(u: Field, p: Field, rhs: RhsTriple, lam):
    """
    Max-norm residuals relative to the size of the terms that enter them.

    Returns ``(momentum, divergence)``.
    """
    mom, div = residual(u, p, rhs, lam)
    lam = ResolventParam.of(lam).lam
    d = u.grid.d
    gu = np.stack([gradient(Field(u.grid, u.data[c])).data for c in range(d)])
    lap_scale = max(
        float(np.max(np.abs(spectral_derivative(Field(u.grid, gu[c, j]), j).data)))
        for c in range(d)
        for j in range(d)
    )
    divf = np.stack([divergence(Field(u.grid, rhs.f.data[:, c])).data for c in range(d)])
    mom_scale = (
        d * lap_scale
        + np.max(np.abs(gradient(p).data))
        + abs(lam) * np.max(np.abs(u.data))
        + np.max(np.abs(rhs.F.data))
        + np.max(np.abs(divf))
    )
    div_scale = sum(float(np.max(np.abs(gu[j, j]))) for j in range(d)) + np.max(np.abs(rhs.g.data))
    m = float(np.max(np.abs(mom.data)))
    v = float(np.max(np.abs(div.data)))
    return (m / mom_scale if mom_scale else m), (v / div_scale if div_scale else v)
