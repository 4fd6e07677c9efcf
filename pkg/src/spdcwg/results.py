"""Containers for sampled curves and their CSV form."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["ScanResult", "format_value", "write_scans_csv"]


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


@dataclass
class ScanResult:
    """A scanned curve: expected rates and, optionally, sampled counts.

    ``expected`` is a rate (1/s) for Monte Carlo scans and a relative rate
    for analytic ones; ``counts`` holds one sampled integer per point.
    """

    variable: str
    x: np.ndarray
    expected: np.ndarray
    counts: np.ndarray | None = None
    interval_s: float | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.expected = np.asarray(self.expected, dtype=float)
        if self.counts is not None:
            self.counts = np.asarray(self.counts, dtype=np.int64)
            if self.counts.shape != self.x.shape:
                raise ValueError("counts and scan variable differ in length")
        if self.expected.shape != self.x.shape:
            raise ValueError("expected rates and scan variable differ in length")

    def points(self):
        """(x, counts) pairs, the input expected by the fitting routines."""
        if self.counts is None:
            raise ValueError("scan carries no sampled counts")
        return list(zip(self.x.tolist(), self.counts.tolist()))

    def write_csv(self, path, header_lines=()) -> Path:
        path = Path(path)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write(f"# scan_variable = {self.variable}\n")
            fh.write("scan_variable,expected_rate,sampled_counts,interval_s,seed\n")
            counts = self.counts if self.counts is not None else [None] * self.x.size
            for x, e, c in zip(self.x, self.expected, counts):
                cols = [format_value(x), f"{e:.12g}", "" if c is None else str(int(c)),
                        "" if self.interval_s is None else format_value(self.interval_s),
                        "" if self.seed is None else str(self.seed)]
                fh.write(",".join(cols) + "\n")
            for name, fit in self.fits.items():
                fh.write(f"# fit {name}\n")
                for line in fit.to_text().splitlines():
                    fh.write(f"# {line}\n")
        return path


def write_scans_csv(path, scans: dict, header_lines=()) -> Path:
    """Several scans in one CSV, distinguished by a leading ``series`` column."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("series,scan_variable,expected_rate,sampled_counts,interval_s,seed\n")
        for name, scan in scans.items():
            counts = scan.counts if scan.counts is not None else [None] * scan.x.size
            for x, e, c in zip(scan.x, scan.expected, counts):
                cols = [str(name), format_value(x), f"{e:.12g}", "" if c is None else str(int(c)),
                        "" if scan.interval_s is None else format_value(scan.interval_s),
                        "" if scan.seed is None else str(scan.seed)]
                fh.write(",".join(cols) + "\n")
    return path
