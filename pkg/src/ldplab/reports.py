"""Structured pass/fail records with measured slacks, plus JSON/CSV emission.

Every verifier in the package returns a VerificationReport.  The slack
convention is uniform: ``slack`` is the margin by which the checked
inequality holds, so an ideal run has ``worst_slack >= 0`` and the check
passes iff ``worst_slack >= -tolerance``.  Equality checks report
``worst_slack = -max_abs_deviation`` under the same rule.
"""

import csv
import json
from dataclasses import dataclass, field

SCHEMA_VERSION = "1"

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass
class VerificationReport:
    inequality: str
    status: str
    events: int
    worst_slack: float
    tolerance: float
    mode: str = "exact"
    details: dict = field(default_factory=dict)

    @classmethod
    def from_slacks(cls, inequality, slacks, tolerance, mode="exact", details=None,
                    inconclusive=False):
        """Build a report from per-event slacks (pass iff min >= -tolerance)."""
        slacks = [s for s in slacks]
        worst = min(slacks) if slacks else float("inf")
        if inconclusive or not slacks:
            status = INCONCLUSIVE
        else:
            status = PASS if worst >= -tolerance else FAIL
        return cls(inequality=inequality, status=status, events=len(slacks),
                   worst_slack=worst, tolerance=tolerance, mode=mode,
                   details=dict(details or {}))

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {
            "inequality": self.inequality,
            "status": self.status,
            "events": self.events,
            "worst_slack": self.worst_slack,
            "tolerance": self.tolerance,
            "mode": self.mode,
            "details": self.details,
        }


def combine_status(statuses) -> str:
    """Conjunction of sub-check statuses; no status is skipped silently."""
    statuses = list(statuses)
    if any(s == FAIL for s in statuses):
        return FAIL
    if any(s == INCONCLUSIVE for s in statuses) or not statuses:
        return INCONCLUSIVE
    return PASS


def status_to_exit(status: str) -> int:
    """Process exit codes: 0 pass, 1 fail, 2 inconclusive."""
    return {PASS: 0, FAIL: 1, INCONCLUSIVE: 2}[status]


def sanitize_for_json(obj):
    """Strict-JSON form: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize_for_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize_for_json(v) for v in obj]
    if isinstance(obj, bool):
        return obj
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and (obj != obj or obj in (float("inf"),
                                                         float("-inf"))):
        return repr(obj)
    return obj


def write_report_json(path, reports, extra=None):
    """Serialize reports (plus optional extra payload) deterministically."""
    payload = {"schema_version": SCHEMA_VERSION,
               "reports": [r.to_dict() for r in reports]}
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(sanitize_for_json(payload), fh, indent=2, sort_keys=True,
                  allow_nan=False)
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
