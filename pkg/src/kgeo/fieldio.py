"""Deterministic CSV and JSON emission for experiment artifacts.

Numbers are written with 17 significant digits, which round-trips IEEE
doubles exactly; separators are commas, the decimal point is '.', line
endings are LF, and no locale is consulted. Equal inputs therefore produce
byte-identical files, which is the reproducibility contract of the command
line harness.
"""

import json

__all__ = ["fmt_real", "write_csv", "write_json"]


def fmt_real(x):
    """Shortest 17-significant-digit decimal; parses back to the same double."""
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    """Write a header and rows; non-string cells go through fmt_real."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else fmt_real(c)
                              for c in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, obj):
    """Sorted-key, indented, LF-terminated JSON."""
    with open(path, "w", newline="") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")
