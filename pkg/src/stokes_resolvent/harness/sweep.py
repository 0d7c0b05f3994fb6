"""
Resolvent-ratio sweeps over the sector.

For every ``(lam, q)`` the solver is run on one fixed data set and the
scale-free ratios

    ratio_grad = |lam|^{1/2} ||grad u||_q / D_grad
    ratio_u    = |lam| ||u||_q / D_u

are recorded.  Whole space: ``D_grad = ||F|| + |lam|^{1/2}(||f|| + ||g||)``
and ``D_u = ||F|| + |lam|^{1/2}||f|| + |lam| ||g||_{-1}``.  Slab and graph:
``D_grad = D_u = ||F|| + |lam|^{1/2}(||f|| + ||g||) + |lam| ||g||_{-1}``.
``||g||_{-1}`` is :func:`neg_sobolev_surrogate`.  Terms whose data vanish
drop out.  A bounded ``max / baseline`` over the sweep is the discrete
form of a ``lam``-independent constant.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field, fields, replace
from typing import List, Optional

import numpy as np

from ..data import random_rhs, random_slab_rhs
from ..field import (
    RhsTriple,
    Sector,
    SlabGrid,
    TorusGrid,
    lq_norm,
    neg_sobolev_surrogate,
    sector_contains,
)
from ..graph import GraphProfile, solve_graph
from ..halfspace import relative_slab_residual, solve_half_space
from ..wholespace import gradient, relative_residual, solve_whole_space

__all__ = ["SweepConfig", "SweepRow", "SweepReport", "run_sweep", "CSV_COLUMNS", "UNIFORMITY_FACTOR"]

UNIFORMITY_FACTOR = 10.0
DOMAINS = ("whole", "half", "graph")


@dataclass(frozen=True)
class SweepConfig:
    """
    Sweep description.  ``angle_fractions`` are fractions of ``pi - theta``;
    with ``signed_angles`` each nonzero fraction is used with both signs.
    """

    domain: str = "whole"
    d: int = 2
    n: int = 32
    n_vertical: int = 33
    height: float = 8.0
    q_list: tuple = (1.5, 2.0, 4.0)
    theta: float = math.pi / 4
    lam_min: float = 1e-3
    lam_max: float = 1e3
    n_lam: int = 25
    angle_fractions: tuple = (0.0, 0.5, 0.9)
    signed_angles: bool = True
    parts: tuple = ("F", "f", "g")
    spectrum: str = "smooth"
    seed: int = 0
    data_scale: float = 1.0
    psi_lip: float = 0.05
    psi_wavenumber: int = 1
    graph_tol: float = 1e-10
    graph_max_iter: int = 200
    threads: int = 1

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}")
        if self.d not in (2, 3):
            raise ValueError("d must be 2 or 3")
        if not 0 < self.theta < math.pi / 2:
            raise ValueError("theta must lie in (0, pi/2)")
        if any(not 1 < q < math.inf for q in self.q_list):
            raise ValueError("every q must lie in (1, inf)")
        if any(not 0 <= abs(a) < 1 for a in self.angle_fractions):
            raise ValueError("angle fractions must lie in [0, 1)")
        if self.n_lam < 1 or not 0 < self.lam_min <= self.lam_max:
            raise ValueError("need 0 < lam_min <= lam_max and n_lam >= 1")
        if self.threads < 1:
            raise ValueError("threads must be positive")
        for lam, _, _ in self.lambdas():
            if not sector_contains(lam, self.sector):
                raise ValueError(f"generated lambda {lam} is outside the sector")

    @classmethod
    def from_mapping(cls, mapping: dict, strict: bool = True) -> "SweepConfig":
        """Build from ``key = value`` options; unknown keys raise unless ``strict`` is False."""
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, val in mapping.items():
            key = {"q": "q_list", "angles": "angle_fractions"}.get(key, key)
            if key not in known:
                if strict:
                    raise ValueError(f"unknown sweep option {key!r}")
                continue
            default = known[key].default
            if isinstance(default, tuple):
                val = tuple(val) if isinstance(val, (list, tuple)) else (val,)
                if key != "parts":
                    val = tuple(float(v) for v in val)
            elif isinstance(default, bool):
                val = bool(val)
            elif isinstance(default, int):
                val = int(val)
            elif isinstance(default, float):
                val = float(val)
            else:
                val = str(val)
            kw[key] = val
        return cls(**kw)

    @property
    def sector(self) -> Sector:
        return Sector(self.theta)

    def moduli(self) -> np.ndarray:
        return np.logspace(math.log10(self.lam_min), math.log10(self.lam_max), self.n_lam)

    def signed_fractions(self) -> list:
        out = []
        for a in self.angle_fractions:
            out.append(float(a))
            if self.signed_angles and a != 0:
                out.append(-float(a))
        return out

    def lambdas(self) -> list:
        """``(lam, modulus, angle_fraction)`` in sweep order."""
        span = math.pi - self.theta
        return [
            (complex(r * np.exp(1j * a * span)), float(r), a)
            for r in self.moduli()
            for a in self.signed_fractions()
        ]

    def as_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out


@dataclass
class SweepRow:
    domain: str
    lam_abs: float
    angle_frac: float
    lam_re: float
    lam_im: float
    q: float
    ratio_grad: float
    ratio_u: float
    res_mom: float
    res_div: float
    iterations: int
    rho: float
    status: str

    def __eq__(self, other):
        if not isinstance(other, SweepRow):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
                continue
            if a != b:
                return False
        return True


CSV_COLUMNS = tuple(f.name for f in fields(SweepRow))


@dataclass
class SweepReport:
    config: dict
    rows: List[SweepRow] = dc_field(default_factory=list)

    def baseline(self, q: float) -> Optional[SweepRow]:
        """Row with angle 0 and modulus nearest to 1 for this ``q``."""
        cand = [r for r in self.rows if r.q == q and r.angle_frac == 0.0 and r.status == "ok"]
        if not cand:
            return None
        return min(cand, key=lambda r: (abs(math.log(r.lam_abs)), r.lam_abs))

    def summary(self) -> dict:
        qs = sorted({r.q for r in self.rows})
        per_q = []
        for q in qs:
            rows = [r for r in self.rows if r.q == q and r.status == "ok"]
            base = self.baseline(q)
            entry = {"q": q, "rows": len(rows), "errors": sum(1 for r in self.rows if r.q == q) - len(rows)}
            for key in ("ratio_u", "ratio_grad"):
                vals = [getattr(r, key) for r in rows]
                b = getattr(base, key) if base else float("nan")
                mx = max(vals) if vals else float("nan")
                entry[key] = {
                    "baseline": b,
                    "max": mx,
                    "min": min(vals) if vals else float("nan"),
                    "max_over_baseline": mx / b if base and b else float("nan"),
                }
            ratio = entry["ratio_u"]["max_over_baseline"]
            entry["passed"] = bool(entry["errors"] == 0 and ratio == ratio and ratio <= UNIFORMITY_FACTOR)
            per_q.append(entry)
        return {"uniformity_factor": UNIFORMITY_FACTOR, "per_q": per_q, "passed": all(e["passed"] for e in per_q)}

    @property
    def passed(self) -> bool:
        return self.summary()["passed"]


# ---------------------------------------------------------------------------
# measurement
# ---------------------------------------------------------------------------


def _build(config: SweepConfig):
    if config.domain == "whole":
        grid = TorusGrid.cube(config.d, config.n)
        rhs = random_rhs(grid, config.seed, config.parts, config.spectrum)
    else:
        grid = SlabGrid.make(config.d, config.n, config.n_vertical, config.height)
        rhs = random_slab_rhs(grid, config.seed, config.parts, config.spectrum)
    if config.data_scale != 1.0:
        rhs = rhs * config.data_scale
    psi = None
    if config.domain == "graph":
        psi = GraphProfile.with_lip(grid.horizontal, config.psi_lip, config.psi_wavenumber)
    return grid, rhs, psi


def _data_norms(rhs: RhsTriple, q: float):
    return (
        lq_norm(rhs.F, q),
        lq_norm(rhs.f, q),
        lq_norm(rhs.g, q),
        neg_sobolev_surrogate(rhs.g, q) if rhs.nonzero["g"] else 0.0,
    )


def _ratios(domain, lam_abs, q, nu, ngu, rhs):
    nF, nf, ng, ns = _data_norms(rhs, q)
    r = math.sqrt(lam_abs)
    if domain == "whole":
        dg = nF + r * nf + r * ng
        du = nF + r * nf + lam_abs * ns
    else:
        dg = du = nF + r * nf + r * ng + lam_abs * ns
    if dg == 0 or du == 0:
        raise ValueError("all data vanish; ratios undefined")
    return r * ngu / dg, lam_abs * nu / du


def _measure(config: SweepConfig, grid, rhs, psi, lam, modulus, frac, q) -> SweepRow:
    iters, rho = 0, 0.0
    if config.domain == "whole":
        sol = solve_whole_space(rhs, lam, sector=config.sector)
        gu = np.stack([gradient(sol.u.__class__(grid, sol.u.data[c])).data for c in range(grid.d)])
        nu = lq_norm(sol.u, q)
        ngu = lq_norm(sol.u.__class__(grid, gu), q)
        res = relative_residual(sol.u, sol.p, rhs, lam)
        ratio_grad, ratio_u = _ratios("whole", abs(lam), q, nu, ngu, rhs)
    elif config.domain == "half":
        sol = solve_half_space(rhs, lam, sector=config.sector)
        nrm = sol.norms(q, "gauss")
        res = relative_slab_residual(sol, rhs)
        ratio_grad, ratio_u = _ratios("half", abs(lam), q, nrm["u"], nrm["grad_u"], rhs)
    else:
        gs = solve_graph(
            rhs, lam, psi, tol=config.graph_tol, max_iter=config.graph_max_iter, sector=config.sector
        )
        nrm = gs.state.norms(q, "gauss")
        res = gs.log.residuals[-1]
        iters, rho = gs.log.iterations, gs.log.rho
        ratio_grad, ratio_u = _ratios("graph", abs(gs.lam), q, nrm["u"], nrm["grad_u"], gs.rhs)
    return SweepRow(
        config.domain,
        modulus,
        frac,
        lam.real,
        lam.imag,
        float(q),
        float(ratio_grad),
        float(ratio_u),
        float(res[0]),
        float(res[1]),
        iters,
        float(rho),
        "ok",
    )


def _job(args):
    config, grid, rhs, psi, lam, modulus, frac, q = args
    try:
        return _measure(config, grid, rhs, psi, lam, modulus, frac, q)
    except Exception as exc:  # recorded in the row; the sweep goes on
        nan = float("nan")
        msg = f"error: {type(exc).__name__}: {exc}".replace("\n", " ").replace(",", ";")
        return SweepRow(config.domain, modulus, frac, lam.real, lam.imag, float(q), nan, nan, nan, nan, 0, nan, msg)


def run_sweep(config: SweepConfig, threads: Optional[int] = None) -> SweepReport:
    """
    One solver call per ``(lam, q)``.  Rows are computed by a pool of
    ``threads`` workers and assembled in configuration order, so the report
    does not depend on scheduling.
    """
    threads = threads or config.threads
    grid, rhs, psi = _build(config)
    jobs = [
        (config, grid, rhs, psi, lam, modulus, frac, q)
        for lam, modulus, frac in config.lambdas()
        for q in config.q_list
    ]
    if threads == 1:
        rows = [_job(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_job, jobs))
    return SweepReport(replace(config, threads=1).as_dict(), rows)
