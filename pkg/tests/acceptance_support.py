"""Helpers for the acceptance suite: a result log and a chunked cache.

The diffusion-exponent run takes hours on one core.  Run
``python3 tests/acceptance_support.py`` to fill the cache ahead of time; the
suite computes any missing chunk itself.
"""
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from ptl.model import dimer_spec
from ptl.moments import MomentTable, moments_green

# one line per criterion, printed in the terminal summary
REPORT: dict[str, str] = {}


def record(key: str, ok: bool, detail: str) -> None:
    REPORT[key] = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"


CACHE = Path(__file__).resolve().parent.parent / "results" / "acceptance"

DIMER_RUN = dict(lam=0.5, q_grid=[1.0, 2.0, 3.0], T_grid=np.logspace(2, 5, 5).tolist(),
                 samples=200, seed=2024, tol=3e-2, points_per_width=1.0, chunk=8)


def run_key(run: dict) -> str:
    return hashlib.sha256(json.dumps(run, sort_keys=True).encode()).hexdigest()[:12]


def chunk_table(run: dict, first: int, n: int, threads=None) -> MomentTable:
    return moments_green(dimer_spec(run["lam"]), run["q_grid"], run["T_grid"], n, run["seed"],
                         tol=run["tol"], points_per_width=run["points_per_width"],
                         threads=threads, first_sample=first)


def _save(path: Path, tab: MomentTable):
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, per_sample=tab.per_sample, sum_rule=tab.sum_rule,
             tail_fraction=tab.tail_fraction, ward_defect=tab.ward_defect)
    tmp.replace(path)


def _load(path: Path, run: dict) -> MomentTable:
    d = np.load(path)
    per = d["per_sample"]
    return MomentTable(np.asarray(run["q_grid"]), np.asarray(run["T_grid"]), per.mean(0),
                       per.std(0), "green_integral", np.zeros(len(run["T_grid"])), len(per),
                       run["seed"], per, d["sum_rule"], d["tail_fraction"], d["ward_defect"])


def dimer_table(run: dict = DIMER_RUN, threads=None, log=print) -> MomentTable:
    """All realizations of ``run``, loading cached chunks and computing the rest."""
    d = CACHE / f"dimer_{run_key(run)}"
    d.mkdir(parents=True, exist_ok=True)
    (d / "run.json").write_text(json.dumps(run, indent=1))
    parts = []
    for first in range(0, run["samples"], run["chunk"]):
        n = min(run["chunk"], run["samples"] - first)
        path = d / f"chunk_{first:04d}.npz"
        if not path.exists():
            log(f"computing realizations {first}..{first + n - 1}")
            _save(path, chunk_table(run, first, n, threads))
        parts.append(_load(path, run))
    return MomentTable.concatenate(parts)


if __name__ == "__main__":
    tab = dimer_table(log=lambda s: print(s, flush=True))
    print(tab.m, file=sys.stderr)
