"""Structural checks: duality pairing and resolvent identity."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..data import random_field
from ..field import DEFAULT_SECTOR, Field, RhsTriple, Sector, TorusGrid
from ..wholespace import gradient, leray_project, solve_whole_space
from .semigroup import resolvent_apply

__all__ = ["DualityReport", "bilinear", "duality_check", "resolvent_identity_error"]


def bilinear(a: np.ndarray, b: np.ndarray, grid: TorusGrid) -> complex:
    """``sum a . b * cell volume`` without conjugation."""
    return complex(np.sum(a * b) * grid.cell_volume)


@dataclass(frozen=True)
class DualityReport:
    lam: complex
    seed: Optional[int]
    lhs: complex
    rhs: float
    rel_error: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.rel_error <= self.tol

    def as_dict(self) -> dict:
        out = asdict(self)
        for k in ("lam", "lhs"):
            out[k] = [out[k].real, out[k].imag]
        out["passed"] = self.passed
        return out


def duality_check(
    lam,
    seed: Optional[int] = 0,
    grid: Optional[TorusGrid] = None,
    F: Optional[Field] = None,
    tol: float = 1e-9,
    sector: Sector = DEFAULT_SECTOR,
) -> DualityReport:
    """
    Solve with divergence-free data ``F``, then solve the dual problem with
    data ``conj(u)``; the solution ``w`` must satisfy

        \\int grad w : grad u + lam \\int w . u = ||u||_2^2.

    ``F`` defaults to the Leray projection of a seeded random field.
    """
    grid = grid or TorusGrid.cube(2, 32)
    if F is None:
        F = leray_project(random_field(grid, 1, seed, spectrum="smooth"))
    u = solve_whole_space(RhsTriple(F=F), lam, sector=sector).u
    w = solve_whole_space(RhsTriple(F=Field(grid, np.conj(u.data))), lam, sector=sector).u
    gu = np.stack([gradient(Field(grid, u.data[c])).data for c in range(grid.d)])
    gw = np.stack([gradient(Field(grid, w.data[c])).data for c in range(grid.d)])
    complex_lam = complex(lam)
    lhs = bilinear(gw, gu, grid) + complex_lam * bilinear(w.data, u.data, grid)
    rhs = float(np.sum(np.abs(u.data) ** 2) * grid.cell_volume)
    scale = max(abs(lhs), rhs)
    err = abs(lhs - rhs) / scale if scale else abs(lhs - rhs)
    return DualityReport(complex_lam, seed, lhs, rhs, float(err), tol)


def resolvent_identity_error(F: Field, lam, mu, sector: Sector = DEFAULT_SECTOR) -> float:
    """
    Relative max-norm defect of
    ``R(lam) F - R(mu) F = (mu - lam) R(lam) R(mu) F`` with ``R(z) = (z + A)^{-1}``.
    """
    a = resolvent_apply(F, lam, sector).data - resolvent_apply(F, mu, sector).data
    b = (complex(mu) - complex(lam)) * resolvent_apply(resolvent_apply(F, mu, sector), lam, sector).data
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    diff = float(np.max(np.abs(a - b)))
    return diff / scale if scale else diff
