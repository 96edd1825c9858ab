"""Per-epoch metrics records and their CSV serialization.

The schema is fixed so that repeated runs with the same config and seed are
byte-identical: floats at 6 decimals, `NA` for metrics that are undefined at
that epoch (never 0).
"""

from dataclasses import dataclass
from typing import Optional

from .errors import DatasetParseError

CSV_HEADER = ("epoch,phase,train_loss,test_error,mr,mp,lr,lp,f1,"
              "tau_hat,mem_size,safe_size,learn_rate,ramp_w")

PHASE_SEEDING = "seeding"
PHASE_EVOLUTION = "evolution"


@dataclass
class EpochMetrics:
    epoch: int
    phase: str
    train_loss: Optional[float]
    test_error: float
    mr: Optional[float]
    mp: Optional[float]
    lr: Optional[float]          # label recall of the selected set
    lp: Optional[float]          # label precision of the selected set
    f1: Optional[float]
    tau_hat: Optional[float]
    mem_size: Optional[int]
    safe_size: Optional[int]
    learn_rate: float
    ramp_w: Optional[float]


def _fmt(v, as_int=False):
    if v is None:
        return "NA"
    if as_int:
        return str(int(v))
    return f"{v:.6f}"


def format_row(m):
    return ",".join([
        str(m.epoch), m.phase,
        _fmt(m.train_loss), _fmt(m.test_error), _fmt(m.mr), _fmt(m.mp),
        _fmt(m.lr), _fmt(m.lp), _fmt(m.f1), _fmt(m.tau_hat),
        _fmt(m.mem_size, as_int=True), _fmt(m.safe_size, as_int=True),
        _fmt(m.learn_rate), _fmt(m.ramp_w),
    ])


def write_metrics_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for m in rows:
            fh.write(format_row(m) + "\n")


def _parse(v, conv):
    return None if v == "NA" else conv(v)


def read_metrics_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise DatasetParseError("bad metrics header", 1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        p = line.split(",")
        if len(p) != 14:
            raise DatasetParseError(f"expected 14 columns, got {len(p)}", lineno)
        if p[1] not in (PHASE_SEEDING, PHASE_EVOLUTION):
            raise DatasetParseError(f"unknown phase {p[1]!r}", lineno)
        try:
            rows.append(EpochMetrics(
                int(p[0]), p[1],
                _parse(p[2], float), float(p[3]), _parse(p[4], float),
                _parse(p[5], float), _parse(p[6], float), _parse(p[7], float),
                _parse(p[8], float), _parse(p[9], float), _parse(p[10], int),
                _parse(p[11], int), float(p[12]), _parse(p[13], float),
            ))
        except ValueError as exc:
            raise DatasetParseError(str(exc), lineno) from exc
    return rows
