"""Verification reports: per-check records, JSON/text/CSV rendering and a canonical form."""

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

FORMATS = ("json", "text", "csv")
# metadata keys that vary between otherwise identical runs
VOLATILE_METADATA = ("wall_time_seconds",)


@dataclass(frozen=True)
class CheckRecord:
    check: str
    anchor: str
    samples: int
    max_defect: float
    tolerance: float
    passed: bool
    witness: tuple = None
    note: str = ""
    tolerance_overridden: bool = False
    points: tuple = field(default=(), repr=False, compare=False)
    defects: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.passed != (self.max_defect <= self.tolerance):
            raise ValueError(f"{self.check}: pass flag disagrees with defect and tolerance")
        if self.passed != (self.witness is None):
            raise ValueError(f"{self.check}: a witness is required exactly for failed checks")

    @classmethod
    def from_samples(cls, check, anchor, defects, points, tolerance, *, note="",
                     overridden=False, notes=None):
        """Build a record from per-sample defects; NaN counts as a failure."""
        d = np.asarray(defects, dtype=float).reshape(-1)
        pts = np.asarray(points, dtype=float).reshape(len(d), -1)
        worst = np.where(np.isnan(d), np.inf, d)
        i = int(np.argmax(worst))
        maxd = float(worst[i])
        passed = maxd <= tolerance
        witness = None if passed else tuple(float(c) for c in pts[i])
        if not passed and notes is not None:
            note = notes[i]
        return cls(check, anchor, len(d), maxd, float(tolerance), passed, witness, note, overridden,
                   tuple(tuple(float(c) for c in p) for p in pts), tuple(float(v) for v in d))

    def summary(self):
        out = {k: v for k, v in asdict(self).items() if k not in ("points", "defects")}
        out["witness"] = list(self.witness) if self.witness is not None else None
        return out


@dataclass(frozen=True)
class VerificationReport:
    records: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        recs = tuple(sorted(self.records, key=lambda r: r.check))
        ids = [r.check for r in recs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate check ids in report")
        object.__setattr__(self, "records", recs)

    @property
    def passed(self):
        return all(r.passed for r in self.records)

    @property
    def failures(self):
        return [r for r in self.records if not r.passed]

    def record(self, check):
        for r in self.records:
            if r.check == check:
                return r
        raise KeyError(check)

    def to_dict(self):
        return {
            "schema": 1,
            "passed": self.passed,
            "metadata": dict(self.metadata),
            "checks": [r.summary() for r in self.records],
        }


def canonical(report):
    """JSON bytes of the report without timing metadata, for run-to-run comparison."""
    d = report.to_dict()
    for key in VOLATILE_METADATA:
        d["metadata"].pop(key, None)
    return json.dumps(d, sort_keys=True, separators=(",", ":")).encode()


def from_json(data):
    d = json.loads(data)
    records = []
    for c in d.get("checks", []):
        w = c.get("witness")
        records.append(CheckRecord(
            check=c["check"], anchor=c["anchor"], samples=int(c["samples"]),
            max_defect=float(c["max_defect"]), tolerance=float(c["tolerance"]),
            passed=bool(c["passed"]), witness=None if w is None else tuple(float(v) for v in w),
            note=c.get("note", ""), tolerance_overridden=bool(c.get("tolerance_overridden", False))))
    return VerificationReport(tuple(records), d.get("metadata", {}))


def _text(report):
    lines = []
    meta = report.metadata
    if meta:
        head = ", ".join(f"{k}={meta[k]}" for k in sorted(meta))
        lines.append(f"# {head}")
    for r in report.records:
        flag = "PASS" if r.passed else "FAIL"
        extra = " (override)" if r.tolerance_overridden else ""
        lines.append(f"{flag}  {r.check:<40} max={r.max_defect:.3e}  tol={r.tolerance:.1e}{extra}  n={r.samples}")
        if not r.passed:
            coords = ", ".join(f"{c:.6g}" for c in r.witness)
            lines.append(f"      witness: ({coords})" + (f"  [{r.note}]" if r.note else ""))
    n_fail = len(report.failures)
    lines.append(f"{len(report.records) - n_fail}/{len(report.records)} checks passed")
    return "\n".join(lines) + "\n"


def _csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "point", "defect"])
    for r in report.records:
        for p, d in zip(r.points, r.defects):
            w.writerow([r.check, ";".join(repr(c) for c in p), repr(d)])
    return buf.getvalue()


def emit_report(report, fmt="json"):
    if fmt == "json":
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode()
    if fmt == "text":
        return _text(report).encode()
    if fmt == "csv":
        return _csv(report).encode()
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
