import dataclasses
import json
import random
from bisect import bisect_right

import pytest
from gmpy2 import mpq

from hypodense.densities import (
    BlockConstantWeight,
    GeometricBlockSet,
    HarmonicWeight,
    UnitWeight,
    density_quotient,
    empty_set,
    estimate_densities,
    evens,
    naturals,
    odds,
)
from hypodense.errors import (
    ConfigError,
    HorizonExhausted,
    ScanExhausted,
    ValidationError,
)
from hypodense.weightforge import (
    PartitionWithBoundedGaps,
    _scan_runs,
    _scan_unit,
    alpha_sequence,
    multi_plan_report,
    round_robin_partition,
    synthesize_weight_multi,
    synthesize_weight_thm1,
)


# -- single-set synthesis ---------------------------------------------------

def test_full_set_plan_is_triangular():
    plan, weight = synthesize_weight_thm1(naturals(), 1, 50)
    assert plan.breakpoints == (0, 1, 3, 6, 10, 15, 21, 28, 36, 45)
    plan.verify(naturals())
    assert weight.admissibility().ok


def test_union_delta_one_exhausts():
    # density 7/8 is unreachable once blocks must straddle the gaps,
    # whose length is twice the preceding run
    with pytest.raises(HorizonExhausted) as err:
        synthesize_weight_thm1(GeometricBlockSet(4, 2), 1, 4**10)
    assert err.value.block_index == 3


def test_union_synthesis_interrupted_block():
    # 4^10 lands inside the search window of block 11, so the strict
    # mode raises while the relaxed mode keeps the 11 finished blocks
    blocks = GeometricBlockSet(4, 2)
    with pytest.raises(HorizonExhausted) as err:
        synthesize_weight_thm1(blocks, mpq(2, 3), 4**10)
    assert err.value.block_index == 11
    plan, _ = synthesize_weight_thm1(blocks, mpq(2, 3), 4**10, min_blocks=5)
    assert plan.block_count() == 11
    plan.verify(blocks)


def test_union_synthesis_large_horizon_bound_chain():
    blocks = GeometricBlockSet(4, 2)
    delta = mpq(2, 3)
    horizon = 4**15
    plan, weight = synthesize_weight_thm1(blocks, delta, horizon, min_blocks=5)
    plan.verify(blocks)
    assert weight.admissibility().ok

    # the proof's chain: inside (n_k, n_{k+1}] the quotient dominates
    # delta * ((k-1) - sum of 2^-j, j < k) / (k+1)
    report = estimate_densities(blocks, weight, horizon)
    edges = plan.breakpoints
    for n, q in zip(report.checkpoints, report.quotients):
        k = bisect_right(edges, n - 1) - 1
        if 1 <= k < plan.block_count():
            floor_sum = sum(mpq(1, 2**j) for j in range(1, k))
            assert q >= delta * ((k - 1) - floor_sum) / (k + 1)


def test_union_synthesis_lower_estimate_climbs():
    blocks = GeometricBlockSet(4, 2)
    lowers = []
    for exp in (10, 20, 30):
        plan, weight = synthesize_weight_thm1(blocks, mpq(2, 3), 4**exp, min_blocks=5)
        lowers.append(estimate_densities(blocks, weight, 4**exp).lower_estimate)
    assert lowers[0] < lowers[1] < lowers[2]
    assert lowers[2] > mpq(3, 5)


def test_synthesis_input_validation():
    with pytest.raises(ConfigError):
        synthesize_weight_thm1(naturals(), 0, 100)
    with pytest.raises(ConfigError):
        synthesize_weight_thm1(naturals(), mpq(3, 2), 100)
    with pytest.raises(ConfigError):
        synthesize_weight_thm1(naturals(), 1, 0)


def test_scan_dual_route_agreement():
    # the run-jumping scan must reproduce the unit scan exactly
    rng = random.Random(11)
    union = GeometricBlockSet(4, 2)
    tri = GeometricBlockSet(3, 3)
    for _ in range(150):
        index_set = rng.choice([union, tri])
        start = rng.randint(0, 4000)
        min_end = start + rng.randint(1, 200)
        horizon = min_end + rng.randint(0, 2500)
        floor = mpq(rng.randint(0, 8), 8)
        assert _scan_runs(index_set, start, min_end, horizon, floor) == _scan_unit(
            index_set, start, min_end, horizon, floor
        )


def test_plan_json_payload():
    plan, _ = synthesize_weight_thm1(naturals(), 1, 30)
    payload = json.loads(json.dumps(plan.to_json_dict()))
    assert payload["breakpoints"][0] == 0
    assert len(payload["certificates"]) == plan.block_count()
    for cert in payload["certificates"]:
        assert cert["length"] == cert["end"] - cert["start"]


def test_plan_verify_catches_tampering():
    plan, _ = synthesize_weight_thm1(naturals(), 1, 30)
    bad_counts = list(plan.counts)
    bad_counts[2] += 1
    tampered = dataclasses.replace(plan, counts=tuple(bad_counts))
    with pytest.raises(ValidationError):
        tampered.verify(naturals())


# -- partitions -------------------------------------------------------------

def test_round_robin_partition_shape():
    part = round_robin_partition(3)
    assert [part.part_of(l) for l in range(1, 8)] == [1, 2, 3, 1, 2, 3, 1]
    part.verify(30)
    for p in range(1, 4):
        for j, l in enumerate(part.members_of(p, 30), start=1):
            assert l <= j * part.gap_bounds[p - 1]


def test_partition_verify_failures():
    lopsided = PartitionWithBoundedGaps(2, lambda l: 1, (5, 5))
    with pytest.raises(ValidationError):
        lopsided.verify(10)
    tight = PartitionWithBoundedGaps(2, lambda l: (l - 1) % 2 + 1, (1, 1))
    with pytest.raises(ValidationError):
        tight.verify(10)
    with pytest.raises(ConfigError):
        PartitionWithBoundedGaps(0, lambda l: 1, ())
    with pytest.raises(ConfigError):
        PartitionWithBoundedGaps(2, lambda l: 1, (1,))


# -- multi-set synthesis ----------------------------------------------------

def test_multi_evens_odds():
    sets = [evens(), odds()]
    deltas = [mpq(1, 2), mpq(1, 2)]
    partition = round_robin_partition(2)
    weight = synthesize_weight_multi(sets, deltas, partition, 10**5)
    assert weight.admissibility().ok
    for target in sets:
        report = estimate_densities(target, weight, 10**5)
        assert report.lower_estimate >= mpq(1, 4) - mpq(1, 20)


def test_multi_single_full_set():
    weight = synthesize_weight_multi([naturals()], [1], round_robin_partition(1), 2000)
    report = estimate_densities(naturals(), weight, 2000)
    assert report.lower_estimate == 1


def test_multi_report_boundary_bounds():
    report = multi_plan_report(
        [evens(), odds()],
        [mpq(1, 2), mpq(1, 2)],
        round_robin_partition(2),
        20000,
    )
    assert len(report["parts"]) == 2
    lengths = [
        b - a for a, b in zip(report["breakpoints"][1:], report["breakpoints"][2:])
    ]
    assert all(b > a for a, b in zip(lengths, lengths[1:]))
    for part in report["parts"]:
        assert part["block_indices"]
        assert all(check["holds"] for check in part["boundary_bounds"])


def test_multi_rejects_empty_set():
    with pytest.raises(HorizonExhausted) as err:
        synthesize_weight_multi(
            [evens(), empty_set()],
            [mpq(1, 2), mpq(1, 2)],
            round_robin_partition(2),
            10**4,
        )
    assert err.value.part == 2
    with pytest.raises(ConfigError):
        synthesize_weight_multi(
            [evens(), empty_set()],
            [mpq(1, 2), 0],
            round_robin_partition(2),
            10**4,
        )


def test_multi_alignment_validation():
    with pytest.raises(ConfigError):
        synthesize_weight_multi([evens()], [mpq(1, 2)], round_robin_partition(2), 100)


# -- window factors ---------------------------------------------------------

def test_alpha_harmonic_frozen():
    # alpha_1 = 4 by hand: (H_5 - 1) / H_6 = 11/21 >= 1/2 while
    # (H_4 - 1) / H_5 = 65/137 < 1/2
    seq = alpha_sequence(HarmonicWeight(), 8)
    assert seq.values(8) == (4, 5, 7, 9, 10, 12, 14, 16)
    h = HarmonicWeight()
    num = h.prefix_sum(5) - h.prefix_sum(1)
    assert num / h.prefix_sum(6) == mpq(11, 21)


def test_alpha_ones_prefix_closed_form():
    # on a long all-ones prefix the condition at n = 1 reads
    # alpha / (alpha + 2) >= 1/2, so every window factor is 2
    seq = alpha_sequence(BlockConstantWeight(list(range(21))), 6)
    assert seq.values(6) == (2, 2, 2, 2, 2, 2)


def test_alpha_doubling_blocks_frozen():
    seq = alpha_sequence(BlockConstantWeight([0, 1, 3, 7, 15, 31, 63, 127, 255, 511, 1023]), 8)
    assert seq.values(8) == (3, 3, 5, 5, 6, 7, 9, 9)


def test_alpha_monotone_minimal():
    seq = alpha_sequence(HarmonicWeight(), 50)
    seq.verify(50)
    values = seq.values(50)
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert all(seq.decrement_breaks(n) for n in range(1, 51))


def test_alpha_extends_on_demand():
    seq = alpha_sequence(HarmonicWeight(), 3)
    assert seq.value_at(12) >= seq.value_at(3)
    assert len(seq.values(12)) == 12


def test_alpha_rejects_unit_weight():
    with pytest.raises(ConfigError):
        alpha_sequence(UnitWeight(), 5)


def test_alpha_cap_exhausts():
    with pytest.raises(ScanExhausted) as err:
        alpha_sequence(HarmonicWeight(), 5, cap=2)
    assert err.value.position == 1
