"""CSV tables, run manifests and plot-ready data files."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .moments import predicted_beta

__all__ = ["SchemaError", "format_value", "write_csv", "sha256_file", "write_manifest",
           "emit_plot_data", "SCHEMAS"]

SCHEMAS = {
    "critical-scan": ["energy", "trace_plus_re", "trace_minus_re", "commutator_norm",
                      "eta_plus", "eta_minus", "flag_2eta", "flag_4eta"],
    "lyapunov": ["z_re", "z_im", "N", "samples", "gamma", "stderr"],
    "deviation-scan": ["z_re", "z_im", "N", "samples", "p_hat", "wilson_lo", "wilson_hi",
                       "log_threshold"],
    "verify-bounds": ["bound_kind", "seed", "sample_index", "z_re", "z_im", "N", "lhs", "rhs",
                      "margin", "satisfied"],
    "moments": ["q", "T", "route", "samples", "M", "stderr", "normalization_defect"],
    "exponents": ["q", "beta_hat", "beta_minus", "beta_plus", "stderr"],
    "ids": ["E", "N_hat", "stderr"],
}


class SchemaError(ValueError):
    """CSV file does not match a known schema."""


def format_value(x) -> str:
    """Fixed rendering: 17 significant digits for floats."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float) or hasattr(x, "dtype"):
        x = x.item() if hasattr(x, "item") else x
        if isinstance(x, bool):
            return "true" if x else "false"
        if isinstance(x, int):
            return str(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if len(r) != len(header):
            raise ValueError(f"row of length {len(r)} for {len(header)} columns")
        w.writerow([format_value(x) for x in r])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path: Path, config: dict, digest: str, version: str, started: datetime,
                   outputs: Sequence[Path], status: int, messages: Sequence[str] = ()) -> Path:
    data = {
        "config_hash": digest,
        "version": version,
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
        "exit_status": status,
        "messages": list(messages),
        "config": config,
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
    }
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def _read(csv_path: Path) -> tuple[list[str], list[dict]]:
    text = Path(csv_path).read_text()
    if not text.strip():
        return [], []
    rows = list(csv.DictReader(io.StringIO(text)))
    header = next(csv.reader(io.StringIO(text)))
    return header, rows


def _qtag(q: float) -> str:
    return format_value(float(q)).replace(".", "p").replace("-", "m")


def emit_plot_data(csv_path: str | Path, kind: str) -> list[Path]:
    """Two-column data files with commented headers naming the axes.

    exponents -> beta_vs_q.dat (q, beta_hat, reference max{0, 1 - 1/(2q)});
    moments   -> moments_q<q>.dat per q (T, M) for log-log axes.
    An empty CSV gives one empty data file.
    """
    csv_path = Path(csv_path)
    if kind not in ("moments", "exponents"):
        raise SchemaError(f"no plot data for kind {kind!r}")
    header, rows = _read(csv_path)
    out_dir = csv_path.parent
    if not header:
        p = out_dir / ("beta_vs_q.dat" if kind == "exponents" else "moments.dat")
        p.write_text("")
        return [p]
    if header != SCHEMAS[kind]:
        raise SchemaError(f"{csv_path.name}: columns {header} do not match the {kind} schema")
    if kind == "exponents":
        p = out_dir / "beta_vs_q.dat"
        lines = ["# x: q (linear)", "# y: fitted beta_hat (linear)",
                 "# reference: max{0, 1 - 1/(2q)}", "# q beta_hat beta_reference"]
        for r in rows:
            q = float(r["q"])
            lines.append(f"{format_value(q)} {r['beta_hat']} {format_value(predicted_beta(q))}")
        p.write_text("\n".join(lines) + "\n")
        return [p]
    by_q: dict[str, list[dict]] = {}
    for r in rows:
        by_q.setdefault(r["q"], []).append(r)
    paths = []
    for q, rs in by_q.items():
        p = out_dir / f"moments_q{_qtag(float(q))}.dat"
        lines = ["# x: T (log axis)", f"# y: M^q_T for q = {q} (log axis)",
                 f"# reference slope on log-log axes: q * beta = "
                 f"{format_value(float(q) * predicted_beta(float(q)))}", "# T M"]
        lines += [f"{r['T']} {r['M']}" for r in rs]
        p.write_text("\n".join(lines) + "\n")
        paths.append(p)
    return paths
