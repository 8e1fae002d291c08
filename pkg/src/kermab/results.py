"""CSV persistence for trial records and regret summaries."""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from kermab.errors import ParseError
from kermab.simcore import Curves, TrialFailure, TrialRecord

SUMMARY_COLUMNS = ("t", "mean_cum_regret", "std_cum_regret")


def fmt(x: float) -> str:
    """Shortest decimal that parses back to the identical float."""
    return repr(float(x))


def _writer(path: Path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_trials(path: os.PathLike, records: list[TrialRecord]) -> None:
    fh, w = _writer(Path(path))
    with fh:
        w.writerow(("trial", "t", "inst_regret", "cum_regret"))
        for rec in records:
            for k in range(rec.T):
                w.writerow((rec.trial, k + 1, fmt(rec.inst_regret[k]), fmt(rec.cum_regret[k])))


def write_actions(path: os.PathLike, records: list[TrialRecord]) -> None:
    fh, w = _writer(Path(path))
    with fh:
        w.writerow(("trial", "t", "agent", "action_idx", "reward"))
        for rec in records:
            n = rec.actions.shape[1]
            for k in range(rec.T):
                for i in range(n):
                    w.writerow((rec.trial, k + 1, i, int(rec.actions[k, i]), fmt(rec.rewards[k, i])))


def write_summary(path: os.PathLike, curves: Curves) -> None:
    fh, w = _writer(Path(path))
    with fh:
        w.writerow(SUMMARY_COLUMNS)
        for t, m, s in zip(curves.t, curves.mean_cum_regret, curves.std_cum_regret):
            w.writerow((int(t), fmt(m), fmt(s)))


def write_failures(path: os.PathLike, failures: list[TrialFailure]) -> None:
    fh, w = _writer(Path(path))
    with fh:
        w.writerow(("trial", "trial_seed", "error"))
        for f in failures:
            w.writerow((f.trial, f.trial_seed, f.error))


def read_summary(path: os.PathLike) -> Curves:
    """Parse a summary CSV; raises ParseError naming the file and line on bad input."""
    path = Path(path)
    ts, means, stds = [], [], []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"{path}: cannot open: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SUMMARY_COLUMNS:
            raise ParseError(f"{path}: expected header {','.join(SUMMARY_COLUMNS)}, got {header}", 1)
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"{path}: expected 3 fields, got {len(row)}", reader.line_num)
            try:
                ts.append(int(row[0]))
                means.append(float(row[1]))
                stds.append(float(row[2]))
            except ValueError:
                raise ParseError(f"{path}: non-numeric field in {row}", reader.line_num) from None
    if not ts:
        raise ParseError(f"{path}: summary has no data rows")
    return Curves(t=np.array(ts), mean_cum_regret=np.array(means), std_cum_regret=np.array(stds),
                  mean_inst_regret=np.diff(np.array(means), prepend=0.0))


def read_trials(path: os.PathLike) -> dict[int, np.ndarray]:
    """Cumulative-regret series per trial from a trials CSV."""
    out: dict[int, list[float]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(int(row["trial"]), []).append(float(row["cum_regret"]))
    return {k: np.array(v) for k, v in out.items()}
