"""CFSDM frequency groups and their spatial sub-groups.

Blocked (NLOS) UEs share the first subcarrier group and get a higher SNR;
LOS UEs are spread over the remaining groups so that each group holds
weakly correlated channels. Inside a group, sub-grouping picks the beams
the outer precoder works on:

* ``TG``: every pre-selected beam carrying group power;
* ``SG``: only the ``N_g`` strongest beams of the group;
* ``JSDM_FA``: several sub-groups on the same subcarrier, each on its
  members' strongest beams. Sub-groups interfere with each other.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .beamspace import PreselectionResult, VirtualChannel, preselect, virtual_channel

__all__ = [
    "Mode",
    "SubGroup",
    "Group",
    "GroupPlan",
    "correlation",
    "correlation_matrix",
    "split_decorrelated",
    "best_split_bruteforce",
    "partition_cfsdm",
    "mean_pairwise_correlation",
    "split_group",
    "auto_split",
    "subgroup",
    "apply_subgrouping",
    "split_to_size",
]

log = logging.getLogger(__name__)


class Mode(str, Enum):
    TG = "TG"
    SG = "SG"
    JSDM_FA = "JSDM_FA"


@dataclass(frozen=True)
class SubGroup:
    ue_indices: np.ndarray
    vcmb_set: np.ndarray
    H_v: VirtualChannel = field(repr=False)


@dataclass(frozen=True)
class Group:
    label: str
    ue_indices: np.ndarray
    nlos: bool
    snr0_boost_db: float = 0.0
    mode: Mode | None = None
    subgroups: tuple[SubGroup, ...] = ()


@dataclass(frozen=True)
class GroupPlan:
    groups: tuple[Group, ...]
    notes: tuple[str, ...] = ()

    @property
    def n_g(self) -> int:
        return len(self.groups)

    def to_dict(self) -> dict:
        out = {"n_g": self.n_g, "notes": list(self.notes), "groups": []}
        for g in self.groups:
            out["groups"].append(
                {
                    "label": g.label,
                    "nlos": g.nlos,
                    "snr0_boost_db": g.snr0_boost_db,
                    "mode": g.mode.value if g.mode else None,
                    "ue_indices": [int(i) for i in g.ue_indices],
                    "subgroups": [
                        {
                            "ue_indices": [int(i) for i in sg.ue_indices],
                            "vcmb_set": [int(b) for b in sg.vcmb_set],
                        }
                        for sg in g.subgroups
                    ],
                }
            )
        return out


def correlation(h_i, h_j) -> float:
    """Normalized magnitude of the inner product of two channel rows."""
    h_i = np.asarray(h_i).ravel()
    h_j = np.asarray(h_j).ravel()
    n_i, n_j = np.linalg.norm(h_i), np.linalg.norm(h_j)
    if n_i == 0 or n_j == 0:
        raise ValueError("correlation is undefined for a zero channel row")
    return float(min(abs(np.vdot(h_i, h_j)) / (n_i * n_j), 1.0))


def correlation_matrix(H) -> np.ndarray:
    H = np.atleast_2d(np.asarray(H))
    norms = np.linalg.norm(H, axis=1)
    if np.any(norms == 0):
        raise ValueError("correlation is undefined for a zero channel row")
    Hn = H / norms[:, None]
    return np.minimum(np.abs(Hn @ Hn.conj().T), 1.0)


def _max_within(C, groups) -> float:
    worst = 0.0
    for g in groups:
        for a, b in itertools.combinations(g, 2):
            worst = max(worst, C[a, b])
    return worst


def split_decorrelated(C: np.ndarray, n_groups: int) -> list[list[int]]:
    """Greedy max-min split of the rows of correlation matrix ``C``.

    The most correlated pair seeds two different groups (further seeds are the
    UEs most correlated with the seeds placed so far). Remaining UEs, most
    correlated first, join the group, among those below the balanced size,
    that minimizes their largest correlation with its current members.
    """
    n = C.shape[0]
    n_groups = max(1, min(n_groups, n))
    if n_groups == 1:
        return [list(range(n))]
    cap = math.ceil(n / n_groups)
    off = C - np.diag(np.diag(C))
    a, b = np.unravel_index(np.argmax(off), off.shape)
    groups: list[list[int]] = [[int(a)], [int(b)]]
    assigned = {int(a), int(b)}
    while len(groups) < n_groups:
        rest = [i for i in range(n) if i not in assigned]
        seeded = [g[0] for g in groups]
        nxt = max(rest, key=lambda i: (max(off[i, s] for s in seeded), -i))
        groups.append([nxt])
        assigned.add(nxt)
    rest = sorted(
        (i for i in range(n) if i not in assigned), key=lambda i: (-off[i].max(), i)
    )
    for i in rest:
        open_groups = [g for g in range(n_groups) if len(groups[g]) < cap]
        g_best = min(
            open_groups,
            key=lambda g: (max(off[i, j] for j in groups[g]), len(groups[g]), g),
        )
        groups[g_best].append(i)
    return [sorted(g) for g in groups]


def best_split_bruteforce(C: np.ndarray, n_groups: int) -> tuple[list[list[int]], float]:
    """Exhaustive balanced split minimizing the largest within-group correlation."""
    n = C.shape[0]
    cap = math.ceil(n / n_groups)
    best, best_val = None, np.inf
    for labels in itertools.product(range(n_groups), repeat=n):
        if labels[0] != 0:
            continue
        counts = np.bincount(labels, minlength=n_groups)
        if counts.max() > cap or counts.min() == 0:
            continue
        groups = [[i for i in range(n) if labels[i] == g] for g in range(n_groups)]
        val = _max_within(C, groups)
        if val < best_val - 1e-12:
            best, best_val = groups, val
    return best, best_val


def _signatures(H_dv, ps: PreselectionResult | None, ues) -> np.ndarray:
    H = np.asarray(H_dv)[np.asarray(ues, dtype=int)]
    if ps is not None:
        Hs = H[:, ps.v_ps]
        if np.all(np.linalg.norm(Hs, axis=1) > 0):
            return Hs
    return H


def partition_cfsdm(
    blocked,
    H_dv,
    ps: PreselectionResult | None,
    n_g: int,
    nlos_boost_db: float = 13.0,
) -> GroupPlan:
    """Split UEs into CFSDM groups: all NLOS UEs first, LOS UEs into ``n_g - 1``
    decorrelated groups. ``blocked`` is a boolean array or a ``CellChannel``."""
    if not 2 <= n_g <= 4:
        raise ValueError(f"n_g must be 2, 3 or 4, got {n_g}")
    blocked = np.asarray(getattr(blocked, "blocked", blocked), dtype=bool)
    nlos = np.flatnonzero(blocked)
    los = np.flatnonzero(~blocked)
    notes = []
    groups = []
    if nlos.size:
        groups.append(Group("G1", nlos, nlos=True, snr0_boost_db=nlos_boost_db))
    else:
        msg = "no NLOS UEs: NLOS group omitted"
        log.warning(msg)
        notes.append(msg)
    n_los_groups = n_g - 1
    if los.size:
        if los.size < n_los_groups:
            msg = f"only {los.size} LOS UEs for {n_los_groups} LOS groups"
            log.warning(msg)
            notes.append(msg)
        C = correlation_matrix(_signatures(H_dv, ps, los))
        for part in split_decorrelated(C, n_los_groups):
            groups.append(
                Group(f"G{len(groups) + 1}", los[np.asarray(part, dtype=int)], nlos=False)
            )
    if len(groups) != n_g:
        notes.append(f"formed {len(groups)} groups instead of {n_g}")
    return GroupPlan(groups=tuple(groups), notes=tuple(notes))


def mean_pairwise_correlation(H_dv, ues) -> float:
    ues = np.asarray(ues, dtype=int)
    if ues.size < 2:
        return 0.0
    C = correlation_matrix(np.asarray(H_dv)[ues])
    iu = np.triu_indices(ues.size, 1)
    return float(C[iu].mean())


def split_group(group: Group, H_dv) -> tuple[Group, Group]:
    """Split one group into two decorrelated halves on separate subcarriers."""
    C = correlation_matrix(np.asarray(H_dv)[group.ue_indices])
    a, b = split_decorrelated(C, 2)
    return (
        replace(group, ue_indices=group.ue_indices[a], subgroups=(), mode=None),
        replace(group, ue_indices=group.ue_indices[b], subgroups=(), mode=None),
    )


def auto_split(plan: GroupPlan, H_dv, threshold: float = 0.5, min_size: int = 4) -> GroupPlan:
    """Split every LOS group of at least ``min_size`` UEs whose mean pairwise
    correlation exceeds ``threshold``; groups are relabelled in order."""
    out, notes = [], list(plan.notes)
    for g in plan.groups:
        rho = mean_pairwise_correlation(H_dv, g.ue_indices)
        if not g.nlos and g.ue_indices.size >= min_size and rho > threshold:
            out.extend(split_group(g, H_dv))
            notes.append(f"{g.label} split (mean correlation {rho:.3f} > {threshold})")
        else:
            out.append(g)
    out = [replace(g, label=f"G{i + 1}") for i, g in enumerate(out)]
    return GroupPlan(groups=tuple(out), notes=tuple(notes))


def _is_full_rank(vc: VirtualChannel, tol: float = 1e-8) -> bool:
    n_g, n_d = vc.H_v.shape
    return n_d >= n_g and vc.s.size > 0 and vc.s[-1] > tol * vc.s[0]


def _jsdm_clusters(H_g: np.ndarray, top_beam: np.ndarray, n_sub: int) -> list[list[int]]:
    """Cluster UEs by strongest beam, then merge clusters by average-link
    channel correlation until ``n_sub`` remain."""
    clusters: dict[int, list[int]] = {}
    for i, b in enumerate(top_beam):
        clusters.setdefault(int(b), []).append(i)
    parts = [clusters[b] for b in sorted(clusters)]
    C = correlation_matrix(H_g)
    while len(parts) > n_sub:
        best, pair = -1.0, (0, 1)
        for x, y in itertools.combinations(range(len(parts)), 2):
            link = C[np.ix_(parts[x], parts[y])].mean()
            if link > best + 1e-15:
                best, pair = link, (x, y)
        x, y = pair
        parts[x] = sorted(parts[x] + parts[y])
        del parts[y]
    return parts


def subgroup(
    group: Group,
    mode: Mode | str,
    H_dv,
    n_v_init: int = 20,
    n_subgroups: int = 2,
) -> list[SubGroup]:
    """Form the sub-groups of ``group`` and their beam sets.

    Beams are ranked by the group's own power over its ``n_v_init``
    pre-selected beams. ``SG`` falls back to ``TG`` with a warning when the
    strongest ``N_g`` beams give a rank-deficient channel.
    """
    mode = Mode(mode)
    H_dv = np.asarray(H_dv)
    ues = np.asarray(group.ue_indices, dtype=int)
    if ues.size == 0:
        raise ValueError(f"group {group.label} is empty")
    ps = preselect(H_dv[ues], min(n_v_init, H_dv.shape[1]))
    beams = ps.v_ps[ps.p_ps > 0]

    if mode is Mode.SG:
        sel = beams[: ues.size]
        vc = virtual_channel(H_dv, ues, sel)
        if sel.size >= ues.size and _is_full_rank(vc):
            return [SubGroup(ues, sel, vc)]
        log.warning(
            "%s: strongest %d beams give a rank-deficient channel, using TG",
            group.label,
            ues.size,
        )
        mode = Mode.TG

    if mode is Mode.TG:
        return [SubGroup(ues, beams, virtual_channel(H_dv, ues, beams))]

    # JSDM-FA
    local_rows = H_dv[np.ix_(ues, beams)]
    parts = _jsdm_clusters(local_rows, ps.m_v_ps[:, 0], n_subgroups)
    if len(parts) < n_subgroups:
        log.warning(
            "%s: only %d distinct strongest beams, forming %d sub-groups",
            group.label,
            len(parts),
            len(parts),
        )
    out = []
    for part in parts:
        members = ues[part]
        own = list(dict.fromkeys(int(b) for b in ps.m_v_ps[part, 0]))
        sub_power = np.sum(np.abs(H_dv[np.ix_(members, beams)]) ** 2, axis=0)
        for b in beams[np.argsort(-sub_power, kind="stable")]:
            if len(own) >= members.size:
                break
            if int(b) not in own:
                own.append(int(b))
        own = np.array(own[: max(members.size, 1)], dtype=int)
        out.append(SubGroup(members, own, virtual_channel(H_dv, members, own)))
    return out


def apply_subgrouping(
    plan: GroupPlan,
    modes,
    H_dv,
    n_v_init: int = 20,
    n_subgroups: int = 2,
) -> GroupPlan:
    """Attach sub-groups to every group; ``modes`` is one mode or one per group."""
    if isinstance(modes, (str, Mode)):
        modes = [modes] * plan.n_g
    if len(modes) != plan.n_g:
        raise ValueError(f"got {len(modes)} modes for {plan.n_g} groups")
    groups = []
    for g, m in zip(plan.groups, modes):
        subs = subgroup(g, m, H_dv, n_v_init, n_subgroups)
        groups.append(replace(g, mode=Mode(m), subgroups=tuple(subs)))
    return GroupPlan(groups=tuple(groups), notes=plan.notes)


def split_to_size(group: Group, H_dv, size: int) -> list[Group]:
    """Break a group into decorrelated groups of at most ``size`` UEs."""
    n = group.ue_indices.size
    if size < 1:
        raise ValueError("size must be positive")
    if n <= size:
        return [group]
    C = correlation_matrix(np.asarray(H_dv)[group.ue_indices])
    parts = split_decorrelated(C, math.ceil(n / size))
    return [
        replace(group, label=f"{group.label}.{i + 1}", ue_indices=group.ue_indices[p],
                subgroups=(), mode=None)
        for i, p in enumerate(parts)
    ]
