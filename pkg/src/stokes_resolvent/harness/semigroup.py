"""
Semigroup generated by the whole-space Stokes operator ``A = Leray (-Lap)``.

    exp(-tA) F = 1/(2 pi i) \\int_Gamma e^{t z} (z + A)^{-1} F dz

with ``Gamma`` running from ``infinity e^{-i phi}`` to ``infinity e^{+i phi}``
to the right of ``0`` and ``phi = pi - theta'``, so that every node lies in
the sector where the resolvent is available.  Two contours are provided:

``"hyperbola"`` (default)
    ``z(u) = mu (1 + sin(i u - alpha))`` with ``alpha = pi/2 - theta'``,
    trapezoidal rule in ``u``.  The integrand is analytic in a strip around
    the real ``u`` axis, so the rule converges geometrically.
``"sector"``
    The two rays ``|z| in [eps, R]`` at angles ``+-phi`` joined by the arc
    ``|z| = eps`` through the positive axis, with ``R = ray_extent / t``,
    composite Gauss-Legendre panels on the rays and on the arc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..field import DEFAULT_SECTOR, Field, RhsTriple, Sector, TorusGrid
from ..wholespace import divergence, leray_project, solve_whole_space

__all__ = ["ContourSpec", "contour_nodes", "resolvent_apply", "semigroup_apply", "semigroup_self_check"]

DIV_TOL = 1e-10


@dataclass(frozen=True)
class ContourSpec:
    """
    Quadrature parameters.

    ``theta_offset`` sets ``theta' = theta + theta_offset``.  For the
    hyperbola, ``mu = mu_t / t`` and ``nodes`` points per half with step
    ``step``.  For the sector contour, ``ray_nodes`` Gauss points per ray
    (in panels of ``panel``), ``arc_nodes`` on the arc, ``ray_extent``
    and arc radius ``arc_radius / t``.
    """

    kind: str = "hyperbola"
    theta_offset: float = 0.1
    nodes: int = 32
    step: float = 0.1
    mu_t: float = 12.0
    ray_nodes: int = 200
    panel: int = 10
    arc_nodes: int = 40
    ray_extent: float = 40.0
    arc_radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("hyperbola", "sector"):
            raise ValueError(f"unknown contour kind {self.kind!r}")

    def refined(self) -> "ContourSpec":
        """The same contour with twice as many nodes."""
        if self.kind == "hyperbola":
            return replace(self, nodes=2 * self.nodes, step=self.step / 2)
        return replace(self, ray_nodes=2 * self.ray_nodes, arc_nodes=2 * self.arc_nodes)


def contour_nodes(t: float, spec: ContourSpec, sector: Sector = DEFAULT_SECTOR):
    """Nodes ``z_k`` and weights ``w_k`` with ``sum w_k f(z_k) ~ 1/(2 pi i) \\int f dz``."""
    if not t > 0:
        raise ValueError("t must be positive")
    theta_p = sector.theta + spec.theta_offset
    if not 0 < theta_p < math.pi / 2:
        raise ValueError("theta + theta_offset must lie in (0, pi/2)")
    if spec.kind == "hyperbola":
        alpha = math.pi / 2 - theta_p
        mu = spec.mu_t / t
        u = spec.step * np.arange(-spec.nodes, spec.nodes + 1)
        z = mu * (1 + np.sin(1j * u - alpha))
        dz = mu * 1j * np.cos(1j * u - alpha)
        return z, spec.step * dz / (2j * math.pi)

    phi = math.pi - theta_p
    eps = spec.arc_radius / t
    R = spec.ray_extent / t
    x, w = np.polynomial.legendre.leggauss(spec.panel)
    npan = max(1, spec.ray_nodes // spec.panel)
    edges = np.geomspace(eps, R, npan + 1)
    r, wr = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        r.append(lo + half * (x + 1))
        wr.append(half * w)
    r, wr = np.concatenate(r), np.concatenate(wr)
    up = np.exp(1j * phi)
    # lower ray inwards, arc counter-clockwise, upper ray outwards
    z_lo, w_lo = r[::-1] * np.conj(up), -wr[::-1] * np.conj(up)
    xa, wa = np.polynomial.legendre.leggauss(spec.arc_nodes)
    ang = phi * xa
    z_arc = eps * np.exp(1j * ang)
    w_arc = 1j * z_arc * phi * wa
    z_up, w_up = r * up, wr * up
    z = np.concatenate([z_lo, z_arc, z_up])
    wt = np.concatenate([w_lo, w_arc, w_up])
    return z, wt / (2j * math.pi)


def resolvent_apply(F: Field, lam, sector: Sector = DEFAULT_SECTOR) -> Field:
    """``(lam + A)^{-1} F`` through the whole-space solver followed by Leray projection."""
    sol = solve_whole_space(RhsTriple(F=F), lam, sector=sector)
    return leray_project(sol.u)


def _check_div_free(F: Field) -> None:
    div = divergence(F).data
    scale = max(1.0, float(np.max(np.abs(F.data)))) * max(F.grid.n_per_axis, 1)
    if float(np.max(np.abs(div))) > DIV_TOL * scale:
        raise ValueError("F is not divergence-free; pass project=True to Leray-project it first")


def semigroup_apply(
    F: Field,
    t: float,
    contour: ContourSpec | None = None,
    project: bool = False,
    sector: Sector = DEFAULT_SECTOR,
) -> Field:
    """
    ``exp(-tA) F`` by contour quadrature of the resolvent.

    Raises
    ------
    ValueError
        ``t <= 0``, or ``F`` not divergence-free and ``project`` is False.
    """
    if not isinstance(F.grid, TorusGrid):
        raise ValueError("semigroup_apply works on torus fields")
    if not t > 0:
        raise ValueError("t must be positive")
    contour = contour or ContourSpec()
    if project:
        F = leray_project(F)
    else:
        _check_div_free(F)
    z, w = contour_nodes(t, contour, sector)
    acc = np.zeros_like(F.data)
    for zk, wk in zip(z, w):
        acc += wk * np.exp(t * zk) * resolvent_apply(F, zk, sector).data
    return Field(F.grid, acc)


def semigroup_self_check(F: Field, t: float, contour: ContourSpec | None = None, **kw) -> float:
    """Relative change of :func:`semigroup_apply` when the number of nodes is doubled."""
    contour = contour or ContourSpec()
    a = semigroup_apply(F, t, contour, **kw).data
    b = semigroup_apply(F, t, contour.refined(), **kw).data
    scale = float(np.max(np.abs(b))) or 1.0
    return float(np.max(np.abs(a - b))) / scale
