"""Persisting results: CSV, plot-data series and config snapshots."""

import csv
import json
import math
import os
from dataclasses import fields
from typing import Dict, Iterable, List, Sequence

from .config import SimulationConfig, config_hash
from .simulate import FlopsRecord, PepRecord, ResultRecord

__all__ = [
    "CSV_HEADER",
    "format_csv",
    "write_csv",
    "read_csv",
    "write_plotdata",
    "write_snapshot",
    "write_failures",
    "write_pep_csv",
    "write_flops_csv",
    "emit_results",
    "snr_at_ber",
]

CSV_HEADER = ("detector", "snr_db", "ber", "ser", "trials", "bit_errors", "wall_time_s",
              "config_hash")


def _num(v) -> str:
    # repr round-trips floats exactly and is platform independent
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def format_csv(records: Sequence[ResultRecord]) -> str:
    lines = [",".join(CSV_HEADER)]
    for r in records:
        lines.append(",".join(_num(getattr(r, k)) for k in CSV_HEADER))
    return "\n".join(lines) + "\n"


def write_csv(records: Sequence[ResultRecord], path) -> None:
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(records))


def read_csv(path) -> List[ResultRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        out = []
        for row in reader:
            out.append(ResultRecord(
                detector=row["detector"], snr_db=float(row["snr_db"]), ber=float(row["ber"]),
                ser=float(row["ser"]), trials=int(row["trials"]),
                bit_errors=int(row["bit_errors"]), wall_time_s=float(row["wall_time_s"]),
                config_hash=row["config_hash"]))
    return out


def write_plotdata(records: Sequence[ResultRecord], out_dir) -> List[str]:
    """One whitespace-separated ``snr_db ber`` file per detector.

    Failed points are skipped.  Returns the written paths.
    """
    series: Dict[str, List[ResultRecord]] = {}
    for r in records:
        series.setdefault(r.detector, []).append(r)
    paths = []
    for label, recs in series.items():
        safe = "".join(ch if ch.isalnum() or ch in "-_.=" else "_" for ch in label)
        path = os.path.join(out_dir, f"{safe}.dat")
        with open(path, "w") as fh:
            fh.write(f"# {label}\n# snr_db ber\n")
            for r in recs:
                if r.failed is None:
                    fh.write(f"{_num(r.snr_db)} {_num(r.ber)}\n")
        paths.append(path)
    return paths


def write_snapshot(cfg: SimulationConfig, out_dir) -> str:
    path = os.path.join(out_dir, "config_snapshot.json")
    doc = {"config_hash": config_hash(cfg), "config": cfg.to_dict()}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def write_failures(records: Sequence[ResultRecord], out_dir) -> str:
    path = os.path.join(out_dir, "failures.json")
    failed = [{"detector": r.detector, "snr_db": r.snr_db, "error": r.failed}
              for r in records if r.failed is not None]
    with open(path, "w") as fh:
        json.dump(failed, fh, indent=2)
        fh.write("\n")
    return path


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_num(v) for v in row) + "\n")


def write_pep_csv(records: Sequence[PepRecord], path) -> None:
    names = [f.name for f in fields(PepRecord)]
    _write_rows(path, names, ([getattr(r, k) for k in names] for r in records))


def write_flops_csv(records: Sequence[FlopsRecord], path) -> None:
    names = [f.name for f in fields(FlopsRecord)]
    _write_rows(path, names, ([getattr(r, k) for k in names] for r in records))


def emit_results(records: Sequence[ResultRecord], cfg: SimulationConfig, out_dir,
                 fmt: str = "csv") -> List[str]:
    """Write ``results.csv`` (or plot-data series) plus the config snapshot."""
    if not records:
        raise ValueError("no records to write")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if fmt == "csv":
        path = os.path.join(out_dir, "results.csv")
        write_csv(records, path)
        written.append(path)
    elif fmt == "plotdata":
        written.extend(write_plotdata(records, out_dir))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    written.append(write_snapshot(cfg, out_dir))
    if any(r.failed is not None for r in records):
        written.append(write_failures(records, out_dir))
    return written


def snr_at_ber(records: Sequence[ResultRecord], detector: str, target: float = 1e-3) -> float:
    """SNR where ``detector``'s BER curve first drops to ``target``.

    Linear interpolation of ``log10(BER)`` between the bracketing points;
    ``nan`` if the curve never reaches the target.  A zero BER is
    interpolated as ``0.5 / trials``, a floor above the true resolution
    that places the crossing late rather than early.
    """
    pts = sorted((r.snr_db, r.ber, r.trials) for r in records
                 if r.detector == detector and r.failed is None)
    if not pts:
        raise ValueError(f"no records for detector {detector!r}")
    lt = math.log10(target)
    prev = None
    for snr, ber, trials in pts:
        if ber <= target:
            if prev is None:
                return snr
            p_snr, p_l = prev
            lb = math.log10(ber) if ber > 0 else math.log10(0.5 / max(trials, 1))
            if p_l == lb:
                return snr
            return p_snr + (snr - p_snr) * (p_l - lt) / (p_l - lb)
        prev = (snr, math.log10(ber))
    return float("nan")
