import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwave_pgp.beamspace import beam_powers, preselect, project, vcm_basis
from mmwave_pgp.channel import PropagationParams, sample_cell
from mmwave_pgp.grouping import (
    Group,
    Mode,
    apply_subgrouping,
    auto_split,
    best_split_bruteforce,
    correlation,
    correlation_matrix,
    partition_cfsdm,
    split_decorrelated,
    split_group,
    split_to_size,
    subgroup,
)

from conftest import random_complex


def test_correlation_examples(rng):
    h = random_complex(rng, 8)
    assert correlation(h, h) == pytest.approx(1.0)
    assert correlation(h, 3 * h) == pytest.approx(1.0)
    assert correlation([1, 0], [0, 1]) == 0.0
    with pytest.raises(ValueError):
        correlation(h, np.zeros(8))
    with pytest.raises(ValueError):
        correlation_matrix(np.zeros((2, 3)))


def _toy():
    # UEs 0 and 1 share a beamspace signature, 2 and 3 are distinct
    H = np.array(
        [[1.0, 0.2, 0.0, 0.1], [1.0, 0.2, 0.0, 0.1], [0.3, 1.0, 0.2, 0.0], [0.0, 0.1, 1.0, 0.4]]
    )
    return H


def test_identical_signatures_split_and_match_bruteforce():
    C = correlation_matrix(_toy())
    greedy = split_decorrelated(C, 2)
    assert not any({0, 1} <= set(g) for g in greedy)
    best, val = best_split_bruteforce(C, 2)
    worst = lambda gs: max(C[a, b] for g in gs for a, b in itertools.combinations(g, 2))
    assert worst(greedy) == pytest.approx(val)
    assert sorted(map(sorted, greedy)) == sorted(map(sorted, best))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 9), st.integers(1, 4), st.integers(0, 2**31))
def test_split_is_balanced_partition(n, k, seed):
    C = correlation_matrix(random_complex(np.random.default_rng(seed), n, 6))
    parts = split_decorrelated(C, k)
    flat = sorted(i for p in parts for i in p)
    assert flat == list(range(n))
    sizes = [len(p) for p in parts]
    assert len(parts) == min(k, n)
    assert max(sizes) <= -(-n // len(parts))


def _cell(seed, geom, p_block=0.2, n_ue=10):
    cell = sample_cell(n_ue, geom, PropagationParams(p_block=p_block), np.random.default_rng(seed))
    H = project(cell.H_d, vcm_basis(geom))
    return cell, H, preselect(H, 20)


def test_partition_nlos_first(geom):
    for seed in range(10):
        cell, H, ps = _cell(seed, geom)
        plan = partition_cfsdm(cell, H, ps, 3)
        if cell.blocked.any():
            assert plan.groups[0].nlos
            assert set(plan.groups[0].ue_indices) == set(np.flatnonzero(cell.blocked))
            assert plan.groups[0].snr0_boost_db == 13.0
        ues = sorted(int(u) for g in plan.groups for u in g.ue_indices)
        assert ues == list(range(10))


def test_partition_two_nlos_example(geom):
    # find a draw with exactly two blocked UEs, as in the reference layout
    for seed in range(100):
        cell, H, ps = _cell(seed, geom)
        if cell.blocked.sum() == 2:
            break
    plan = partition_cfsdm(cell, H, ps, 3)
    assert plan.n_g == 3
    assert len(plan.groups[0].ue_indices) == 2
    assert [len(g.ue_indices) for g in plan.groups[1:]] == [4, 4]


def test_partition_all_los_warns(geom, caplog):
    cell, H, ps = _cell(1, geom, p_block=0.0)
    plan = partition_cfsdm(cell, H, ps, 3)
    assert plan.n_g == 2
    assert not any(g.nlos for g in plan.groups)
    assert any("no NLOS" in n for n in plan.notes)
    assert "no NLOS" in caplog.text
    with pytest.raises(ValueError):
        partition_cfsdm(cell, H, ps, 5)


def test_auto_split_threshold(geom):
    cell, H, ps = _cell(2, geom, p_block=0.0)
    plan = partition_cfsdm(cell, H, ps, 2)
    assert auto_split(plan, H, threshold=1.0).n_g == 1
    split = auto_split(plan, H, threshold=0.0)
    assert split.n_g == 2
    assert [g.label for g in split.groups] == ["G1", "G2"]
    a, b = split_group(plan.groups[0], H)
    assert len(a.ue_indices) + len(b.ue_indices) == 10


def test_split_to_size(geom):
    cell, H, ps = _cell(3, geom, p_block=0.0, n_ue=16)
    g = Group("G2", np.arange(16), nlos=False)
    parts = split_to_size(g, H, 4)
    assert [len(p.ue_indices) for p in parts] == [4, 4, 4, 4]
    assert split_to_size(parts[0], H, 4) == [parts[0]]


def test_subgroup_modes(geom):
    cell, H, ps = _cell(4, geom, p_block=0.0)
    plan = partition_cfsdm(cell, H, ps, 3)
    g = plan.groups[0]
    tg = subgroup(g, "TG", H, n_v_init=20)
    assert len(tg) == 1 and len(tg[0].vcmb_set) <= 20
    sg = subgroup(g, Mode.SG, H, n_v_init=20)
    assert len(sg) == 1 and len(sg[0].vcmb_set) == len(g.ue_indices)
    # exactly the top-N beams by group power
    p = beam_powers(H[g.ue_indices])
    assert set(sg[0].vcmb_set) == set(np.argsort(-p, kind="stable")[: len(g.ue_indices)])
    js = subgroup(g, Mode.JSDM_FA, H, n_subgroups=2)
    assert len(js) == 2
    assert sorted(int(u) for s in js for u in s.ue_indices) == sorted(g.ue_indices)
    for s in js:
        assert len(s.vcmb_set) >= len(s.ue_indices)
    with pytest.raises(ValueError):
        subgroup(Group("G9", np.array([], dtype=int), nlos=False), "TG", H)


def test_sg_falls_back_on_rank_deficiency(caplog):
    H = np.zeros((2, 5), dtype=complex)
    H[0, 0] = H[1, 0] = 1.0
    g = Group("G1", np.array([0, 1]), nlos=False)
    subs = subgroup(g, "SG", H, n_v_init=5)
    assert "rank-deficient" in caplog.text
    np.testing.assert_array_equal(subs[0].vcmb_set, [0])


def test_partition_property_over_modes(geom):
    for seed in range(5):
        cell, H, ps = _cell(seed, geom)
        plan = partition_cfsdm(cell, H, ps, 3)
        for mode in Mode:
            full = apply_subgrouping(plan, mode, H)
            seen = [int(u) for g in full.groups for s in g.subgroups for u in s.ue_indices]
            assert sorted(seen) == list(range(10))
            for g in full.groups:
                if mode is not Mode.JSDM_FA:
                    # a single sub-group per subcarrier: no intra-group MAI
                    assert len(g.subgroups) == 1
        d = full.to_dict()
        assert d["n_g"] == full.n_g
    with pytest.raises(ValueError):
        apply_subgrouping(plan, ["SG"], H)
