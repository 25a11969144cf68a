"""Structured text reports and CSV writers.

Derivation reports are plain text with a stable field order so they can be
diffed and used as golden files.  Every expression is printed in the kernel
grammar and re-parses to a structurally equal expression.
"""

from __future__ import annotations

import csv

from .grammar import print_expr


class DerivationReport:
    """Ordered sections of key/value lines; values may be expressions."""

    def __init__(self, title: str = "modlag derivation report"):
        self.title = title
        self.header: list[tuple[str, str]] = []
        self.sections: list[tuple[str, list[tuple[str, str]]]] = []
        self.log: list[str] = []

    def meta(self, key: str, value) -> None:
        self.header.append((key, str(value)))

    def section(self, name: str) -> list:
        rows: list[tuple[str, str]] = []
        self.sections.append((name, rows))
        return rows

    def series_section(self, name: str, series) -> None:
        rows = self.section(name)
        for j, c in enumerate(series.coeffs):
            rows.append((f"h^{j}", print_expr(c)))

    def exprs_section(self, name: str, items) -> None:
        rows = self.section(name)
        for key, e in items:
            rows.append((key, print_expr(e)))

    def note(self, message: str) -> None:
        self.log.append(message)

    def render(self) -> str:
        out = [self.title]
        for k, v in self.header:
            out.append(f"{k}: {v}")
        for name, rows in self.sections:
            out.append("")
            out.append(f"[{name}]")
            for k, v in rows:
                out.append(f"{k}: {v}")
        if self.log:
            out.append("")
            out.append("[truncation_log]")
            for i, line in enumerate(self.log):
                out.append(f"step{i}: {line}")
        out.append("")
        return "\n".join(out)


def parse_report(text: str) -> dict:
    """Parse a rendered report back into {section: {key: value}}.

    Header lines land in section ''.  Values are left as strings; callers
    re-parse expressions with the grammar as needed.
    """
    sections: dict[str, dict[str, str]] = {"": {}}
    current = sections[""]
    lines = text.splitlines()
    for line in lines[1:]:
        line = line.rstrip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            current = sections.setdefault(name, {})
            continue
        key, sep, value = line.partition(": ")
        if not sep:
            raise ValueError(f"malformed report line: {line!r}")
        current[key] = value
    return sections


def write_trajectory_csv(path, traj, observables: dict | None = None) -> None:
    """One row per sample: t, x components, optional velocity components
    and observable columns."""
    dim = traj.states.shape[1]
    cols = ["t"] + [f"x{i}" for i in range(dim)]
    if traj.velocities is not None:
        cols += [f"v{i}" for i in range(dim)]
    obs = observables or {}
    cols += list(obs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i, t in enumerate(traj.times):
            row = [repr(float(t))]
            row += [repr(float(v)) for v in traj.states[i]]
            if traj.velocities is not None:
                row += [repr(float(v)) for v in traj.velocities[i]]
            row += [repr(float(series[i])) for series in obs.values()]
            w.writerow(row)


def write_order_study_csv(path, study) -> None:
    """Ladder rows plus fitted-slope metadata rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "defect"])
        for h, d in zip(study.hs, study.defects):
            w.writerow([repr(float(h)), repr(float(d))])
        w.writerow(["slope", repr(float(study.slope))])
        w.writerow(["expected", repr(float(study.expected))])


def write_comparison_csv(path, comparison: dict) -> None:
    """Mesh-point deviation table from lab.meshpoint_comparison."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "deviation"])
        for t, d in zip(comparison["times"], comparison["deviation"]):
            w.writerow([repr(float(t)), repr(float(d))])
        w.writerow(["sup", repr(float(comparison["sup"]))])
