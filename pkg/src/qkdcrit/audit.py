"""Batch audit of claimed ``(n, ε_sec)`` security parameters.

Claims are read from CSV (header row required) or JSON (a list of objects,
or an object with a ``claims`` list). Each claim needs ``n`` and either
``epsilon_sec`` (any positive number, strings such as ``"1e-5000"`` are
fine) or ``eps_sec_log10``; ``label``, ``leak_EC`` and ``auth_bits`` are
optional. Invalid rows become rejects; only unreadable files raise.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

from . import logdomain
from .criteria import DEFAULT_EXPONENT
from .errors import OutOfRange, ParseError
from .keyrate import COLUMNS, ReevaluationRow, reevaluate

FIELDS = ("label", "n", "epsilon_sec", "eps_sec_log10", "leak_EC", "auth_bits")
REPORT_COLUMNS = COLUMNS + ("label",)
ROUNDING_FOOTER = (
    "exact log10 values are reported; rounded literature figures for matching "
    "claims appear as notes below"
)


@dataclass(frozen=True)
class AuditClaim:
    label: str
    n: int
    log10_epsilon_sec: float
    leak_EC: float = 0.0
    auth_bits: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise OutOfRange(f"n={self.n} must be at least 1")
        if not self.log10_epsilon_sec <= 0.0 or math.isnan(self.log10_epsilon_sec):
            raise OutOfRange(f"epsilon_sec=10^{self.log10_epsilon_sec:g} outside (0, 1]")
        if self.leak_EC < 0 or self.auth_bits < 0:
            raise OutOfRange("leak_EC and auth_bits must be non-negative")


class Reject(NamedTuple):
    line: int
    label: str
    reason: str


class ParsedClaims(NamedTuple):
    claims: list  # (line, AuditClaim)
    rejects: list


def _number(value, name: str) -> float:
    if isinstance(value, bool):
        raise OutOfRange(f"{name} must be a number")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise OutOfRange(f"{name}={value!r} is not a number") from None
    if math.isnan(out) or math.isinf(out):
        raise OutOfRange(f"{name}={value!r} is not finite")
    return out


def claim_from_record(record: dict) -> AuditClaim:
    """Build a claim from one parsed row; raises ``OutOfRange`` with a readable reason."""
    unknown = set(record) - set(FIELDS)
    if unknown:
        raise OutOfRange(f"unknown field(s): {', '.join(sorted(unknown))}")
    present = {k: v for k, v in record.items() if v not in (None, "")}
    if "n" not in present:
        raise OutOfRange("missing n")
    n_val = _number(present["n"], "n")
    if n_val != int(n_val):
        raise OutOfRange(f"n={present['n']!r} is not an integer")
    has_eps, has_log = "epsilon_sec" in present, "eps_sec_log10" in present
    if has_eps == has_log:
        raise OutOfRange("give exactly one of epsilon_sec or eps_sec_log10")
    if has_eps:
        eps = present["epsilon_sec"]
        if isinstance(eps, bool):
            raise OutOfRange("epsilon_sec must be a number")
        log_eps = logdomain.log10_of(eps if isinstance(eps, str) else _number(eps, "epsilon_sec"))
    else:
        log_eps = _number(present["eps_sec_log10"], "eps_sec_log10")
    return AuditClaim(
        label=str(present.get("label", "")),
        n=int(n_val),
        log10_epsilon_sec=log_eps,
        leak_EC=_number(present.get("leak_EC", 0), "leak_EC"),
        auth_bits=_number(present.get("auth_bits", 0), "auth_bits"),
    )


def _collect(records) -> ParsedClaims:
    claims, rejects = [], []
    for line, record in records:
        try:
            claims.append((line, claim_from_record(record)))
        except OutOfRange as exc:
            label = str(record.get("label", "")) if isinstance(record, dict) else ""
            rejects.append(Reject(line, label, f"OutOfRange: {exc}"))
    return ParsedClaims(claims, rejects)


def parse_csv(text: str) -> ParsedClaims:
    """Rows keyed by header; line numbers count from 1 and include the header."""
    lines = [ln for ln in text.splitlines()]
    body = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip() and not ln.lstrip().startswith("#")]
    if not body:
        return ParsedClaims([], [])
    header_line, header = body[0]
    names = [h.strip() for h in next(csv.reader([header]))]
    if "n" not in names:
        raise ParseError("header row must name an 'n' column", header_line)
    records, rejects = [], []
    for line, raw in body[1:]:
        cells = [c.strip() for c in next(csv.reader([raw]))]
        if len(cells) != len(names):
            rejects.append(Reject(line, "", f"expected {len(names)} fields, found {len(cells)}"))
            continue
        records.append((line, dict(zip(names, cells))))
    parsed = _collect(records)
    merged = sorted(parsed.rejects + rejects, key=lambda r: r.line)
    return ParsedClaims(parsed.claims, merged)


def parse_json(text: str) -> ParsedClaims:
    """Claims from JSON; a reject's ``line`` is the 1-based index of the claim."""
    if not text.strip():
        return ParsedClaims([], [])
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    if isinstance(data, dict):
        if "claims" not in data:
            raise ParseError("expected a list of claims or an object with a 'claims' key", 1)
        data = data["claims"]
    if not isinstance(data, list):
        raise ParseError("claims must be a list", 1)
    records, rejects = [], []
    for i, item in enumerate(data, start=1):
        if not isinstance(item, dict):
            rejects.append(Reject(i, "", "claim is not an object"))
        else:
            records.append((i, item))
    parsed = _collect(records)
    return ParsedClaims(parsed.claims, sorted(parsed.rejects + rejects, key=lambda r: r.line))


def parse_claims(text: str, fmt: str | None = None, name: str = "") -> ParsedClaims:
    """Dispatch on ``fmt`` (``"csv"``/``"json"``), else on the file suffix, else sniff."""
    if fmt is None:
        suffix = Path(name).suffix.lower()
        if suffix in (".json", ".csv"):
            fmt = suffix[1:]
        else:
            fmt = "json" if text.lstrip()[:1] in ("[", "{") else "csv"
    if fmt == "json":
        return parse_json(text)
    if fmt == "csv":
        return parse_csv(text)
    raise ValueError(f"unknown claims format {fmt!r}")


def read_claims(path, fmt: str | None = None) -> ParsedClaims:
    p = Path(path)
    return parse_claims(p.read_text(encoding="utf-8"), fmt, p.name)


def evaluate_claims(
    claims: Sequence[AuditClaim], exponent: float = DEFAULT_EXPONENT, jobs: int = 1
) -> list[ReevaluationRow]:
    """Rows in input order regardless of ``jobs``."""

    def one(c: AuditClaim) -> ReevaluationRow:
        return reevaluate(c.n, c.log10_epsilon_sec, c.leak_EC, c.auth_bits, c.label, exponent)

    if jobs > 1 and len(claims) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, claims))
    return [one(c) for c in claims]


@dataclass(frozen=True)
class AuditReport:
    rows: list
    rejects: list
    exponent: float = DEFAULT_EXPONENT

    def footer(self) -> list[str]:
        notes = []
        for row in self.rows:
            notes.extend(row.footnotes())
        return ([ROUNDING_FOOTER] if notes else []) + notes

    def to_dict(self) -> dict:
        return {
            "columns": list(REPORT_COLUMNS),
            "exponent": self.exponent,
            "rows": [
                {
                    "label": r.label,
                    "values": r.values(),
                    "display": r.display(),
                    "reference": r.reference,
                }
                for r in self.rows
            ],
            "rejects": [r._asdict() for r in self.rejects],
            "footer": self.footer(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        """log10 columns only; rejects and footer follow as ``#`` comment lines."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in self.rows:
            vals = r.values()
            writer.writerow([repr(vals[c]) if isinstance(vals[c], float) else vals[c] for c in COLUMNS] + [r.label])
        for rej in self.rejects:
            buf.write(f"# reject line {rej.line} [{rej.label}]: {rej.reason}\n")
        for note in self.footer():
            buf.write(f"# {note}\n")
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown report format {fmt!r}")


def run_audit(parsed: ParsedClaims, exponent: float = DEFAULT_EXPONENT, jobs: int = 1) -> AuditReport:
    claims = [c for _, c in parsed.claims]
    rejects = list(parsed.rejects)
    rows = []
    # a claim can still fail downstream (for example an out-of-range exponent)
    try:
        rows = evaluate_claims(claims, exponent, jobs)
    except OutOfRange:
        rows = []
        for line, c in parsed.claims:
            try:
                rows.extend(evaluate_claims([c], exponent))
            except OutOfRange as exc:
                rejects.append(Reject(line, c.label, f"OutOfRange: {exc}"))
        rejects.sort(key=lambda r: r.line)
    return AuditReport(rows, rejects, exponent)


def parse_report_csv(text: str) -> list[dict]:
    """Read rows back from :meth:`AuditReport.to_csv`, used to compare formats."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        row = {}
        for k, v in rec.items():
            if k == "label":
                row[k] = v
            elif k in ("n", "l_uniform"):
                row[k] = int(v)
            else:
                row[k] = float(v)
        out.append(row)
    return out
