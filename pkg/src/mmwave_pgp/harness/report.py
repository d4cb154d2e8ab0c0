"""Aggregation of run records and file emission (CSV / JSON)."""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, dump_config
from .runner import RECORD_FIELDS, OpgpaRow, RunRecord, RunResult

__all__ = [
    "Summary",
    "aggregate",
    "gaussian_violations",
    "emit",
    "emit_opgpa",
    "read_records",
    "fmt",
]

GAUSS_TOL = 1e-3


def fmt(x) -> str:
    """Six significant digits for floats, plain text for everything else."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


@dataclass
class Summary:
    curves: dict = field(default_factory=dict)
    se_by_seed: dict = field(default_factory=dict)
    se_median: float = math.nan
    se_mean: float = math.nan
    area: float = math.nan
    seua: float = math.nan
    operating_snr_db: float = math.nan
    kind: str = ""
    ref_se: float = math.nan
    ref_seua: float = math.nan

    def to_dict(self) -> dict:
        return {
            "se_kind": self.kind,
            "operating_snr_db": self.operating_snr_db,
            "se_median": self.se_median,
            "se_mean": self.se_mean,
            "area_m2": self.area,
            "seua_median": self.seua,
            "ref_se": self.ref_se,
            "ref_seua": self.ref_seua,
            "ref_seua_from_area": (
                self.ref_se / self.area if self.area > 0 else math.nan
            ),
            "se_by_seed": {str(k): v for k, v in sorted(self.se_by_seed.items())},
        }


def aggregate(
    records,
    area: float,
    operating_snr_db: float,
    kind: str = "ZF_PGP",
    ref_se: float = math.nan,
    ref_seua: float = math.nan,
) -> Summary:
    """Per-group sum-MI curves and the cell spectral efficiency.

    ``curves[(group, kind)]`` lists ``(snr0_db, mean, median, n_trials)`` of
    the group sum MI. The SE of one trial sums the MI of every UE of ``kind``
    at the sweep point nearest ``operating_snr_db``; each CFSDM subcarrier
    counts once. ``seua = median SE / area``.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    sums = defaultdict(float)
    for r in records:
        sums[(r.group, r.kind, r.snr0_db, r.seed)] += r.mi
    per = defaultdict(list)
    for (g, k, snr, seed), v in sums.items():
        per[(g, k, snr)].append(v)
    curves = defaultdict(list)
    for (g, k, snr), vals in sorted(per.items()):
        curves[(g, k)].append((snr, float(np.mean(vals)), float(np.median(vals)), len(vals)))

    summary = Summary(curves=dict(curves), area=area, kind=kind,
                      ref_se=ref_se, ref_seua=ref_seua)
    snrs = sorted({r.snr0_db for r in records if r.kind == kind})
    if snrs:
        op = min(snrs, key=lambda s: (abs(s - operating_snr_db), s))
        se = defaultdict(float)
        for r in records:
            if r.kind == kind and r.snr0_db == op:
                se[r.seed] += r.se
        vals = list(se.values())
        summary.operating_snr_db = op
        summary.se_by_seed = dict(se)
        summary.se_median = float(np.median(vals))
        summary.se_mean = float(np.mean(vals))
        summary.seua = summary.se_median / area
    return summary


def gaussian_violations(records, tol: float = GAUSS_TOL) -> list[tuple[RunRecord, float]]:
    """Pairs where the finite-alphabet MI exceeds its Gaussian-input counterpart."""
    gauss = {
        (r.seed, r.group, r.subgroup, r.ue, r.snr0_db, r.kind[: -len("_GAUSS")]): r.mi
        for r in records
        if r.kind.endswith("_GAUSS")
    }
    bad = []
    for r in records:
        key = (r.seed, r.group, r.subgroup, r.ue, r.snr0_db, r.kind)
        if key in gauss and r.mi > gauss[key] + tol:
            bad.append((r, gauss[key]))
    return bad


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(x) for x in row])
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def emit(result: RunResult, out_dir, summary: Summary | None = None) -> list[Path]:
    """Write ``records.csv``, ``summary.json``, ``config.txt`` and one
    ``fig_<scenario>_<group>_<precoder>.csv`` per curve.

    Power audits and the Gaussian-dominance check are re-asserted first.
    """
    cfg = result.config
    for t in result.trials:
        bad = [k for k, ok in t.audits if not ok]
        if bad:
            raise AssertionError(f"trial {t.trial}: power constraint violated for {bad}")
    records = result.records
    viol = gaussian_violations(records)
    if viol:
        r, g = viol[0]
        raise AssertionError(
            f"{len(viol)} records exceed their Gaussian-input MI, e.g. {r} vs {g:.6g}"
        )
    if summary is None and records:
        summary = aggregate(records, cfg.geometry().area, cfg.operating_snr_db,
                            cfg.se_kind, cfg.ref_se, cfg.ref_seua)

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out}: {e}") from e
    written = []

    p = out / "records.csv"
    _write_csv(p, RECORD_FIELDS, ([getattr(r, f) for f in RECORD_FIELDS] for r in records))
    written.append(p)

    if summary is not None:
        for (group, kind), pts in sorted(summary.curves.items()):
            p = out / f"fig_{cfg.name}_{group}_{kind}.csv"
            _write_csv(p, ("snr0_db", "sum_mi_mean", "sum_mi_median", "n_trials"), pts)
            written.append(p)

    p = out / "config.txt"
    p.write_text(dump_config(cfg), encoding="utf-8")
    written.append(p)

    doc = {
        "scenario": cfg.name,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "summary": summary.to_dict() if summary else None,
        "failures": [asdict(f) for f in result.failures],
        "plans": {str(t.seed): t.plan for t in result.trials},
    }
    p = out / "summary.json"
    p.write_text(json.dumps(_json_safe(doc), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)

    if result.opgpa:
        written.extend(emit_opgpa(result.opgpa, out))
    return written


def emit_opgpa(rows, out_dir) -> list[Path]:
    """Per-draw OPGPA rows and ``fig_opgpa.csv`` (median over draws per ``I_S``)."""
    rows = list(rows)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fields = tuple(OpgpaRow.__dataclass_fields__)
    p1 = out / "opgpa_rows.csv"
    _write_csv(p1, fields, ([getattr(r, f) for f in fields] for r in rows))
    by_is = defaultdict(list)
    for r in rows:
        by_is[r.I_S].append(r)
    fig = []
    for I_S, rs in sorted(by_is.items()):
        fig.append((
            I_S,
            float(np.median([r.snr_opgpa_db for r in rs])),
            float(np.median([r.snr_nopgpa_db for r in rs])),
            float(np.median([r.savings_db for r in rs])),
            len(rs),
        ))
    p2 = out / "fig_opgpa.csv"
    _write_csv(p2, ("I_S", "snr_opgpa_db", "snr_nopgpa_db", "savings_db", "n_groups"), fig)
    return [p1, p2]


def read_records(path) -> list[RunRecord]:
    types = {f: t for f, t in zip(RECORD_FIELDS, (int, str, int, int, float, str,
                                                  float, float, float, float))}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != RECORD_FIELDS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [RunRecord(**{k: types[k](v) for k, v in row.items()}) for row in reader]


def summary_from_dir(in_dir) -> tuple[ScenarioConfig, Summary]:
    from .config import load_config

    in_dir = Path(in_dir)
    cfg = load_config(in_dir / "config.txt")
    recs = read_records(in_dir / "records.csv")
    return cfg, aggregate(recs, cfg.geometry().area, cfg.operating_snr_db,
                          cfg.se_kind, cfg.ref_se, cfg.ref_seua)
