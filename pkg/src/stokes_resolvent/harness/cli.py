"""
Command line entry point ``stokes-resolvent``.

Subcommands: ``sweep``, ``solve``, ``duality``, ``semigroup``,
``probe-kernel``, ``probe-contraction``.  Global options ``--config``,
``--out``, ``--seed`` and ``--threads`` come before the subcommand.  The
exit status is 0 only when every tolerance checked by the subcommand holds.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from ..data import random_field, random_rhs, random_slab_rhs
from ..dump import write_field
from ..field import DEFAULT_SECTOR, Field, SlabGrid, TorusGrid, vector_field
from ..graph import GraphProfile, contraction_probe, solve_graph
from ..halfspace import kernel_decay_probe, relative_slab_residual, solve_half_space
from ..wholespace import leray_project, relative_residual, solve_whole_space
from .checks import duality_check, resolvent_identity_error
from .config import load_config
from .report import emit_report
from .semigroup import ContourSpec, semigroup_apply, semigroup_self_check
from .sweep import SweepConfig, run_sweep

log = logging.getLogger("stokes_resolvent.cli")

TOL = {"whole": 1e-10, "half": 1e-9, "graph": 1e-8}


def _complex(text: str) -> complex:
    try:
        return complex(str(text).replace(" ", ""))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _floats(text: str):
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n", encoding="utf-8")


def _pick(args, cfg: dict, name: str, default):
    val = getattr(args, name, None)
    if val is not None:
        return val
    return cfg.get(name, default)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_sweep(args, cfg: dict) -> int:
    mapping = dict(cfg)
    for key in ("domain", "d", "n", "n_vertical", "height", "n_lam", "spectrum", "psi_lip"):
        val = getattr(args, key, None)
        if val is not None:
            mapping[key] = val
    if args.q is not None:
        mapping["q_list"] = _floats(args.q)
    if args.seed is not None:
        mapping["seed"] = args.seed
    mapping["threads"] = args.threads or int(cfg.get("threads", 1))
    config = SweepConfig.from_mapping(mapping, strict=False)
    report = run_sweep(config)
    out = Path(args.out)
    stem = f"sweep_{config.domain}"
    emit_report(report, "csv", out / f"{stem}.csv")
    emit_report(report, "json", out / f"{stem}.json")
    summary = report.summary()
    tol = TOL[config.domain]
    res_ok = all(r.status == "ok" and max(r.res_mom, r.res_div) <= tol for r in report.rows)
    for e in summary["per_q"]:
        print(
            f"q={e['q']:g}: max/baseline ratio_u = {e['ratio_u']['max_over_baseline']:.4g} "
            f"(ratio_grad {e['ratio_grad']['max_over_baseline']:.4g}) "
            f"{'PASS' if e['passed'] else 'FAIL'}"
        )
    print(f"residuals <= {tol:g}: {'PASS' if res_ok else 'FAIL'}")
    print(f"wrote {out / stem}.csv and .json")
    return 0 if summary["passed"] and res_ok else 1


def cmd_solve(args, cfg: dict) -> int:
    domain = _pick(args, cfg, "domain", "whole")
    d = int(_pick(args, cfg, "d", 2))
    n = int(_pick(args, cfg, "n", 32))
    lam = _complex(_pick(args, cfg, "lam", "1"))
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    spectrum = str(cfg.get("spectrum", "smooth"))
    out = Path(args.out)
    info = {"domain": domain, "lam": [lam.real, lam.imag], "seed": seed}
    if domain == "whole":
        grid = TorusGrid.cube(d, n)
        rhs = random_rhs(grid, seed, spectrum=spectrum)
        sol = solve_whole_space(rhs, lam)
        u, p = sol.u, sol.p
        res = relative_residual(u, p, rhs, lam)
    else:
        grid = SlabGrid.make(d, n, int(_pick(args, cfg, "n_vertical", n + 1)), float(_pick(args, cfg, "height", 8.0)))
        rhs = random_slab_rhs(grid, seed, spectrum=spectrum)
        if domain == "half":
            sol = solve_half_space(rhs, lam)
            u, p = sol.u, sol.p
            res = relative_slab_residual(sol, rhs)
        elif domain == "graph":
            lip = float(_pick(args, cfg, "psi_lip", 0.05))
            psi = GraphProfile.with_lip(grid.horizontal, lip)
            gs = solve_graph(rhs, lam, psi)
            u, p = gs.u, gs.p
            res = gs.log.residuals[-1]
            info["iterations"] = gs.log.iterations
            info["rho"] = float(gs.log.rho)
            info["psi"] = psi.describe()
            write_field(Field(grid.horizontal, psi.psi), out / "psi", "psi")
        else:
            raise ValueError(f"unknown domain {domain!r}")
    for name, fld in (("u", u), ("p", p), ("F", rhs.F), ("f", rhs.f), ("g", rhs.g)):
        write_field(fld, out / name, name)
    info["residual"] = {"momentum": float(res[0]), "divergence": float(res[1])}
    ok = bool(max(res) <= TOL[domain])
    info["passed"] = ok
    _write_json(out / "solve.json", info)
    print(f"{domain}: residual momentum {res[0]:.3e}, divergence {res[1]:.3e} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_duality(args, cfg: dict) -> int:
    lam = _complex(_pick(args, cfg, "lam", "1"))
    seeds = int(_pick(args, cfg, "seeds", 5))
    base = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    grid = TorusGrid.cube(int(_pick(args, cfg, "d", 2)), int(_pick(args, cfg, "n", 32)))
    reports = [duality_check(lam, base + i, grid) for i in range(seeds)]
    for r in reports:
        print(f"seed {r.seed}: lhs={r.lhs:.12g} rhs={r.rhs:.12g} rel={r.rel_error:.2e} {'PASS' if r.passed else 'FAIL'}")
    _write_json(Path(args.out) / "duality.json", {"reports": [r.as_dict() for r in reports]})
    return 0 if all(r.passed for r in reports) else 1


def cmd_semigroup(args, cfg: dict) -> int:
    n = int(_pick(args, cfg, "n", 32))
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    spec = ContourSpec(kind=str(_pick(args, cfg, "contour", "hyperbola")))
    grid = TorusGrid.cube(2, n)
    X = grid.mesh()
    mode = vector_field(grid, np.stack([np.cos(X[1]), np.zeros_like(X[0])]))
    checks = {}
    r1 = semigroup_apply(mode, 1.0, spec)
    checks["single_mode"] = float(np.max(np.abs(r1.data - math.exp(-1.0) * mode.data)))
    F = leray_project(random_field(grid, 1, seed, spectrum="smooth"))
    a = semigroup_apply(semigroup_apply(F, 0.4, spec), 0.6, spec).data
    b = semigroup_apply(F, 1.0, spec).data
    checks["semigroup_property"] = float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
    norms = [float(np.sqrt(np.sum(np.abs(semigroup_apply(F, t, spec).data) ** 2) * grid.cell_volume)) for t in np.arange(1, 11) / 10]
    checks["monotone_excess"] = max(0.0, max((norms[i + 1] - norms[i]) / norms[i] for i in range(len(norms) - 1)))
    checks["self_check"] = semigroup_self_check(F, 1.0, spec)
    rng = np.random.default_rng(seed)
    span = math.pi - DEFAULT_SECTOR.theta
    errs = []
    for _ in range(3):
        lam, mu = (10 ** rng.uniform(-1, 1) * np.exp(1j * rng.uniform(-0.9, 0.9) * span) for _ in range(2))
        errs.append(resolvent_identity_error(F, lam, mu))
    checks["resolvent_identity"] = max(errs)
    limits = {"single_mode": 1e-6, "semigroup_property": 1e-6, "monotone_excess": 1e-6, "self_check": 1e-8, "resolvent_identity": 1e-9}
    ok = True
    for k, v in checks.items():
        good = bool(v <= limits[k])
        ok &= good
        print(f"{k}: {v:.3e} (limit {limits[k]:g}) {'PASS' if good else 'FAIL'}")
    _write_json(Path(args.out) / "semigroup.json", {"contour": spec.kind, "checks": checks, "limits": limits, "passed": ok})
    return 0 if ok else 1


def cmd_probe_kernel(args, cfg: dict) -> int:
    lam = _complex(_pick(args, cfg, "lam", "1"))
    delta = float(_pick(args, cfg, "delta", 0.5))
    d = int(_pick(args, cfg, "d", 2))
    if not math.isclose(abs(lam), 1.0):
        print("probe-kernel expects |lambda| = 1", file=sys.stderr)
        return 1
    m0 = kernel_decay_probe(lam, delta, d=d)
    ok = bool(math.isfinite(m0))
    print(f"M0 estimate (lambda={lam}, delta={delta}, d={d}): {m0:.6g}")
    _write_json(Path(args.out) / "probe_kernel.json", {"lam": [lam.real, lam.imag], "delta": delta, "d": d, "M0": m0, "passed": ok})
    return 0 if ok else 1


def cmd_probe_contraction(args, cfg: dict) -> int:
    lam = _complex(_pick(args, cfg, "lam", "1"))
    lips = _floats(_pick(args, cfg, "lips", "0.02,0.05,0.1"))
    n = int(_pick(args, cfg, "n", 32))
    slab = SlabGrid.make(2, n, int(_pick(args, cfg, "n_vertical", n + 1)), float(_pick(args, cfg, "height", 8.0)))
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    rows = []
    for lip in lips:
        psi = GraphProfile.with_lip(slab.horizontal, lip)
        rho = contraction_probe(psi, lam, n_probes=int(_pick(args, cfg, "n_probes", 2)), slab=slab, seed=seed)
        rows.append({"lip": lip, "rho_hat": float(rho)})
        print(f"lip={lip:g}: rho_hat={rho:.4g}")
    ok = bool(all(r["rho_hat"] < 1 for r in rows))
    _write_json(Path(args.out) / "probe_contraction.json", {"lam": [lam.real, lam.imag], "rows": rows, "passed": ok})
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stokes-resolvent", description="Stokes resolvent solvers and verification harness")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--threads", type=int, help="worker threads for sweeps")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="resolvent-ratio sweep over the sector")
    s.add_argument("--domain", choices=["whole", "half", "graph"])
    s.add_argument("--d", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--n-vertical", dest="n_vertical", type=int)
    s.add_argument("--height", type=float)
    s.add_argument("--n-lam", dest="n_lam", type=int)
    s.add_argument("--q", help="comma-separated exponents")
    s.add_argument("--spectrum", choices=["flat", "smooth"])
    s.add_argument("--psi-lip", dest="psi_lip", type=float)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("solve", help="one solve with seeded data; dumps fields")
    s.add_argument("--domain", choices=["whole", "half", "graph"])
    s.add_argument("--lam", type=_complex)
    s.add_argument("--d", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--n-vertical", dest="n_vertical", type=int)
    s.add_argument("--height", type=float)
    s.add_argument("--psi-lip", dest="psi_lip", type=float)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("duality", help="duality pairing identity over several seeds")
    s.add_argument("--lam", type=_complex)
    s.add_argument("--seeds", type=int)
    s.add_argument("--d", type=int)
    s.add_argument("--n", type=int)
    s.set_defaults(func=cmd_duality)

    s = sub.add_parser("semigroup", help="contour-integral semigroup checks")
    s.add_argument("--contour", choices=["hyperbola", "sector"])
    s.add_argument("--n", type=int)
    s.set_defaults(func=cmd_semigroup)

    s = sub.add_parser("probe-kernel", help="sampled decay constant of the corrector kernels")
    s.add_argument("--lam", type=_complex)
    s.add_argument("--delta", type=float)
    s.add_argument("--d", type=int)
    s.set_defaults(func=cmd_probe_kernel)

    s = sub.add_parser("probe-contraction", help="power-iteration estimate of the Neumann contraction")
    s.add_argument("--lam", type=_complex)
    s.add_argument("--lips", help="comma-separated Lipschitz numbers")
    s.add_argument("--n", type=int)
    s.add_argument("--n-probes", dest="n_probes", type=int)
    s.set_defaults(func=cmd_probe_contraction)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else {}
        return int(args.func(args, cfg))
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
