"""
A reduced resolvent-ratio sweep over the sector for the three domains, with
the report written as CSV and JSON.
"""

import sys
import tempfile
from pathlib import Path

from stokes_resolvent.harness.report import emit_report
from stokes_resolvent.harness.sweep import SweepConfig, run_sweep

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
for domain in ("whole", "half", "graph"):
    cfg = SweepConfig(domain=domain, n=32, n_lam=9, q_list=(2.0,), psi_lip=0.05)
    report = run_sweep(cfg, threads=4)
    for e in report.summary()["per_q"]:
        print(
            f"{domain:5s} q={e['q']:g}: ratio_u in [{e['ratio_u']['min']:.3f}, {e['ratio_u']['max']:.3f}], "
            f"max/baseline {e['ratio_u']['max_over_baseline']:.2f} -> {'PASS' if e['passed'] else 'FAIL'}"
        )
    emit_report(report, "csv", out / f"sweep_{domain}.csv")
    emit_report(report, "json", out / f"sweep_{domain}.json")
print("reports in", out)
