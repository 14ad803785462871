"""Deterministic report rows: CSV and JSON writers shared by the CLI suites.

Every numerical row carries quantity, value, std_error (zero when the
quantity is deterministic), the tolerance it was checked against, the holds
flag, and the seed that produced it.  Formatting is fixed at 17 significant
digits so identical (config, seed) runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

__all__ = ["ReportRow", "report_csv_text", "write_report_csv",
           "write_json_summary", "mc_estimate_csv_text", "write_mc_estimates_csv"]

HEADER = "quantity,value,std_error,tolerance,holds,seed"
MC_HEADER = "quantity,value,std_error,n_samples,seed"


@dataclass(frozen=True)
class ReportRow:
    quantity: str
    value: float
    std_error: float
    tolerance: float
    holds: bool
    seed: int

    def to_csv(self) -> str:
        return ",".join([
            self.quantity,
            f"{self.value:.17g}",
            f"{self.std_error:.17g}",
            f"{self.tolerance:.17g}",
            "true" if self.holds else "false",
            str(self.seed),
        ])


def report_csv_text(rows) -> str:
    return "\n".join([HEADER] + [r.to_csv() for r in rows]) + "\n"


def write_report_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write(report_csv_text(rows))


def mc_estimate_csv_text(entries) -> str:
    """Monte Carlo estimate rows: (quantity, MCEstimate) pairs."""
    lines = [MC_HEADER]
    for quantity, est in entries:
        lines.append(",".join([
            quantity,
            f"{est.value:.17g}",
            f"{est.std_error:.17g}",
            str(est.n_samples),
            str(est.seed),
        ]))
    return "\n".join(lines) + "\n"


def write_mc_estimates_csv(entries, path) -> None:
    with open(path, "w") as fh:
        fh.write(mc_estimate_csv_text(entries))


def write_json_summary(suite: str, rows, seed: int, path) -> dict:
    summary = {
        "suite": suite,
        "passed": sum(1 for r in rows if r.holds),
        "failed": sum(1 for r in rows if not r.holds),
        "seed": seed,
    }
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
