"""Monte-Carlo orchestration: one trial draws a cell, groups its UEs and
evaluates every configured precoder over the SNR sweep."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..beamspace import preselect, project, vcm_basis
from ..channel import sample_cell
from ..grouping import (
    GroupPlan,
    Mode,
    apply_subgrouping,
    auto_split,
    partition_cfsdm,
    split_to_size,
    subgroup,
)
from ..interference import mai_report
from ..mutual_info import gaussian_mi, qam
from ..opgpa import QosTarget, opgpa_gains
from ..precoding import (
    effective_singular_values,
    get_optimizer,
    scalar_mi,
    vaac_pgp,
    zf_pgp,
    zfp,
    zfp_mi,
)
from .config import ScenarioConfig

__all__ = [
    "RunRecord",
    "RECORD_FIELDS",
    "OpgpaRow",
    "TrialFailure",
    "TrialResult",
    "RunResult",
    "trial_seed",
    "build_plan",
    "run_trial",
    "run_scenario",
    "sim_threads",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunRecord:
    seed: int
    group: str
    subgroup: int
    ue: int
    snr0_db: float
    kind: str
    mi: float
    se: float
    mai_power: float = 0.0
    k_m: float = math.nan


RECORD_FIELDS = tuple(RunRecord.__dataclass_fields__)


@dataclass(frozen=True)
class OpgpaRow:
    seed: int
    group: str
    n_ue: int
    I_S: float
    snr_req_db: float
    snr_opgpa_db: float
    snr_nopgpa_db: float
    savings_db: float
    feasible: bool
    mi_min: float
    mi_max: float


@dataclass(frozen=True)
class TrialFailure:
    trial: int
    seed: int
    stage: str
    error: str


@dataclass
class TrialResult:
    trial: int
    seed: int
    records: list = field(default_factory=list)
    opgpa: list = field(default_factory=list)
    plan: dict | None = None
    audits: list = field(default_factory=list)
    failure: TrialFailure | None = None


@dataclass
class RunResult:
    config: ScenarioConfig
    trials: list

    @property
    def records(self) -> list[RunRecord]:
        return [r for t in self.trials for r in t.records]

    @property
    def opgpa(self) -> list[OpgpaRow]:
        return [r for t in self.trials for r in t.opgpa]

    @property
    def failures(self) -> list[TrialFailure]:
        return [t.failure for t in self.trials if t.failure is not None]


def trial_seed(master: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(trial,))


def sim_threads() -> int:
    env = os.environ.get("SIM_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("SIM_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def build_plan(cfg: ScenarioConfig, rng: np.random.Generator):
    """Draw a cell and form its CFSDM groups and sub-groups."""
    geom = cfg.geometry()
    cell = sample_cell(cfg.n_ue, geom, cfg.propagation(), rng)
    H_dv = project(cell.H_d, vcm_basis(geom))
    ps = preselect(H_dv, cfg.n_v_init)
    plan = partition_cfsdm(cell, H_dv, ps, cfg.n_g, cfg.nlos_boost_db)
    plan = auto_split(plan, H_dv, cfg.split_threshold)
    modes = [cfg.mode_for(i) for i in range(plan.n_g)]
    plan = apply_subgrouping(plan, modes, H_dv, cfg.n_v_init, cfg.n_subgroups)
    return cell, H_dv, ps, plan


def _records_single(cfg, seed, group, H_dv, snr_db, c, opt, audits):
    sg = group.subgroups[0]
    vc = sg.H_v
    snr = 10 ** ((snr_db + group.snr0_boost_db) / 10)
    ues = [int(u) for u in sg.ue_indices]
    out = []

    def add(kind, values):
        for u, v in zip(ues, values):
            out.append(RunRecord(seed, group.label, 0, u, snr_db, kind, float(v), float(v)))

    if "ZFP" in cfg.precoders:
        P, mi = zfp_mi(vc, snr, c, cfg.L)
        audits.append(("ZFP", P.check_power()))
        add("ZFP", mi)
        if cfg.gaussian:
            add("ZFP_GAUSS", [gaussian_mi(P.gain**2 * snr)] * len(ues))
    if "ZF_PGP" in cfg.precoders:
        P, mi = zf_pgp(vc, snr, c, cfg.L, opt)
        audits.append(("ZF_PGP", P.check_power()))
        add("ZF_PGP", mi)
        if cfg.gaussian:
            s = effective_singular_values(vc).s_eff
            add("ZF_PGP_GAUSS", gaussian_mi(2 * s**2 * snr))
    if "VAAC_PGP" in cfg.precoders:
        # block m rides the m-th singular value; it is booked to the m-th UE
        P, mi = vaac_pgp(vc, snr, c, cfg.L, opt)
        audits.append(("VAAC_PGP", P.check_power()))
        add("VAAC_PGP", mi)
        if cfg.gaussian:
            add("VAAC_PGP_GAUSS", gaussian_mi(2 * vc.s[: len(ues)] ** 2 * snr))
    return out


def _records_jsdm(cfg, seed, group, H_dv, snr_db, c, opt, audits):
    snr = 10 ** ((snr_db + group.snr0_boost_db) / 10)
    subs = group.subgroups
    out = []
    for kind in ("ZFP", "ZF_PGP"):
        if kind not in cfg.precoders:
            continue
        if kind == "ZFP":
            factors = [zfp(sg.H_v) for sg in subs]
        else:
            factors = [zf_pgp(sg.H_v, snr, c, cfg.L, opt)[0] for sg in subs]
        for P in factors:
            audits.append((f"JSDM_{kind}", P.check_power()))
        for l, sg in enumerate(subs):
            others = [(subs[j], factors[j]) for j in range(len(subs)) if j != l]
            if others:
                rep = mai_report(H_dv, sg, others, snr, cfg.mai_convention)
                p_tot, snr_eff = rep.p_total, rep.snr_eff
            else:
                p_tot = np.zeros(sg.ue_indices.size)
                snr_eff = np.full(sg.ue_indices.size, snr)
            if kind == "ZFP":
                g2 = factors[l].gain ** 2
                gam = g2 * snr_eff
                mi = [scalar_mi(x, c, cfg.L) for x in gam]
            else:
                s = effective_singular_values(sg.H_v).s_eff
                gam = 2 * s**2 * snr_eff
                mi = [opt.best(x).mi for x in gam]
            for i, u in enumerate(sg.ue_indices):
                out.append(RunRecord(seed, group.label, l, int(u), snr_db, kind,
                                     float(mi[i]), float(mi[i]), float(p_tot[i])))
                if cfg.gaussian:
                    gm = float(gaussian_mi(gam[i]))
                    out.append(RunRecord(seed, group.label, l, int(u), snr_db,
                                         f"{kind}_GAUSS", gm, gm, float(p_tot[i])))
    return out


def _opgpa_pass(cfg, seed, plan, H_dv, c, opt):
    snr0 = 10 ** (cfg.opgpa_snr0_db / 10)
    records, rows = [], []
    for group in plan.groups:
        if group.nlos:
            continue
        for piece in split_to_size(group, H_dv, cfg.opgpa_group_size):
            sg = subgroup(piece, Mode.SG, H_dv, cfg.n_v_init)[0]
            eff = effective_singular_values(sg.H_v)
            for I_S in cfg.opgpa_is:
                res = opgpa_gains(eff, QosTarget(I_S, snr0), c, cfg.L, optimizer=opt)
                mi = [opt.best(g).mi for g in res.snr_eff]
                kind = f"OPGPA_IS{I_S:g}"
                for u, m, k in zip(sg.ue_indices, mi, res.k):
                    records.append(RunRecord(seed, piece.label, 0, int(u), cfg.opgpa_snr0_db,
                                             kind, float(m), float(m), 0.0, float(k)))
                rows.append(OpgpaRow(
                    seed, piece.label, int(sg.ue_indices.size), float(I_S),
                    10 * math.log10(res.snr_req), 10 * math.log10(res.snr_opgpa),
                    10 * math.log10(res.snr_nopgpa), res.savings_db, res.feasible,
                    float(min(mi)), float(max(mi)),
                ))
    return records, rows


def run_trial(cfg: ScenarioConfig, trial: int, opgpa_only: bool = False) -> TrialResult:
    """Run one trial; any error is caught and reported with the failing stage."""
    ss = trial_seed(cfg.seed, trial)
    seed = int(ss.generate_state(1)[0])
    result = TrialResult(trial=trial, seed=seed)
    stage = "setup"
    try:
        c = qam(cfg.M)
        opt = get_optimizer(c, cfg.L)
        stage = "grouping"
        _, H_dv, _, plan = build_plan(cfg, np.random.default_rng(ss))
        result.plan = plan.to_dict()
        if not opgpa_only:
            for group in plan.groups:
                for snr_db in cfg.snr_db:
                    stage = f"{group.label}@{snr_db:g}dB"
                    if group.mode is Mode.JSDM_FA:
                        recs = _records_jsdm(cfg, seed, group, H_dv, snr_db, c, opt, result.audits)
                    else:
                        recs = _records_single(cfg, seed, group, H_dv, snr_db, c, opt, result.audits)
                    result.records.extend(recs)
        if cfg.opgpa_is:
            stage = "opgpa"
            recs, rows = _opgpa_pass(cfg, seed, plan, H_dv, c, opt)
            result.records.extend(recs)
            result.opgpa.extend(rows)
        stage = "audit"
        bad = [k for k, ok in result.audits if not ok]
        if bad:
            raise AssertionError(f"precoder power constraint violated for {sorted(set(bad))}")
    except Exception as e:  # a failed trial must not stop the run
        result.records, result.opgpa = [], []
        result.failure = TrialFailure(trial, seed, stage, f"{type(e).__name__}: {e}")
        log.error("trial %d (seed %d) aborted at %s: %s", trial, seed, stage, result.failure.error)
    return result


def _run_trial_args(args):
    return run_trial(*args)


def run_scenario(cfg: ScenarioConfig, threads: int | None = None,
                 opgpa_only: bool = False) -> RunResult:
    """Run all trials of ``cfg``; trials are independent and may run in parallel.

    Results are in trial order whatever the thread count.
    """
    threads = threads or sim_threads()
    jobs = [(cfg, t, opgpa_only) for t in range(cfg.trials)]
    if threads > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=min(threads, cfg.trials)) as ex:
            trials = list(ex.map(_run_trial_args, jobs))
    else:
        trials = [run_trial(*j) for j in jobs]
    return RunResult(config=cfg, trials=trials)


def plan_of(cfg: ScenarioConfig, trial: int) -> GroupPlan:
    """Group plan of one trial, for inspection."""
    return build_plan(cfg, np.random.default_rng(trial_seed(cfg.seed, trial)))[3]
