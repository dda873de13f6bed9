"""CSV output of benchmark records."""

import csv
import io
import sys

from ..errors import IoError

HEADER = ("variant", "dim", "extents", "arch", "workers", "iterations", "total_s",
          "per_element_s", "converged", "checksum")


def _row(rec):
    cfg = rec.config
    return (cfg.variant, cfg.dim, "x".join(str(n) for n in cfg.extents), rec.arch, rec.workers,
            rec.iterations, f"{rec.total_s:.9g}", f"{rec.per_element_s:.9g}",
            "true" if rec.converged else "false", rec.checksum)


def format_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for rec in records:
        w.writerow(_row(rec))
    return buf.getvalue()


def emit_csv(records, dest=None):
    """Write records as CSV to a path, an open text file, or stdout (``None`` or ``-``)."""
    text = format_csv(records)
    if dest is None or dest == "-":
        sys.stdout.write(text)
        return
    if hasattr(dest, "write"):
        dest.write(text)
        return
    try:
        with open(dest, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {dest}: {exc.strerror or exc}") from exc
