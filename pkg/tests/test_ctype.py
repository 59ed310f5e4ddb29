"""Operator construction and exact action.

Frozen tables below were computed once by hand-expanding the defining
recursions (pairing constraints, ladder inductions, block edges) and are
asserted verbatim; the dynamic tests then check the identities the
construction promises (weight products, periodicity, linearity) by
independent brute evaluation.
"""

import dataclasses
import json
import random

import pytest
from gmpy2 import mpq

from hypodense.ctype import (
    CTypeParams,
    PsiMap,
    Schedule,
    SparseVec,
    apply,
    apply_power,
    block_functional,
    build_psi,
    build_schedule,
    orbit_rows,
    project_block,
    realize_params,
    schedule_from_tables,
)
from hypodense.errors import (
    ConfigError,
    MapInfeasible,
    SupportOutOfRange,
    ValidationError,
)
from hypodense.exactnum import DyadicScalar


@pytest.fixture(scope="module")
def psi():
    return build_psi(2, 4, 2, 11)


@pytest.fixture(scope="module")
def structural(psi):
    return build_schedule("structural", psi, 6)


@pytest.fixture(scope="module")
def params(structural):
    return realize_params(structural, structural.n[7] - 1)


@pytest.fixture(scope="module")
def small_params(psi):
    sched = build_schedule("structural", psi, 3)
    return realize_params(sched, sched.n[4] - 1)


# ---------------------------------------------------------------------------
# pairing map


def test_psi_constraint_unwinding_at_one():
    built = build_psi(1, 2, 1, 1)
    assert built.table == ((1, 2),)
    assert built.psi1(1) == 1
    assert built.psi2(1) == 2
    built.validate()


def test_psi_requested_fiber_multiplicity():
    built = build_psi(1, 2, 3, 3)
    assert len(built.fiber(1, 2)) >= 3


def test_psi_frozen_round_robin(psi):
    assert psi.table == (
        (1, 2),
        (1, 2),
        (1, 3),
        (2, 3),
        (1, 4),
        (2, 4),
        (1, 2),
        (1, 3),
        (2, 3),
        (1, 4),
        (2, 4),
    )
    assert psi.promises == {1: 2, 2: 3}
    psi.validate()


def test_psi_lookback_violation_rejected():
    # second coordinate fails to clear the threshold set below psi1(2) = 2
    bad = PsiMap(((1, 3), (2, 3)), {}, 2, 3, 1)
    with pytest.raises(ValidationError):
        bad.validate()


def test_psi_pair_shape_violation_rejected():
    bad = PsiMap(((2, 3),), {}, 2, 3, 1)
    with pytest.raises(ValidationError):
        bad.validate()


def test_psi_fiber_shortfall_rejected():
    bad = PsiMap(((1, 2), (1, 2), (1, 2)), {1: 2}, 1, 2, 5)
    with pytest.raises(ValidationError):
        bad.validate()


def test_psi_infeasible_horizon():
    with pytest.raises(MapInfeasible):
        build_psi(2, 4, 2, 5)


def test_psi_infeasible_j_max():
    # first coordinate 3 promises pairs from j = 4 upward
    with pytest.raises(MapInfeasible):
        build_psi(3, 3, 1, 100)


def test_psi_pair_range_guard(psi):
    with pytest.raises(ConfigError):
        psi.pair(0)
    with pytest.raises(ConfigError):
        psi.pair(psi.horizon + 1)


# ---------------------------------------------------------------------------
# schedules


def test_hand_table_gamma_exponent():
    dummy = build_psi(1, 2, 1, 2)
    hand = schedule_from_tables(dummy, delta=(2, 41, 43), tau=(1, 40, 42), Delta=(2, 184))
    assert hand.gamma_exponent(1) == 1 * 2 + 2 * 1 + 1 - 40 == -35
    assert hand.final_conditions(1)["leak"]


def test_hand_table_minimal_tau_at_level_two():
    dummy = build_psi(1, 2, 1, 2)
    hand = schedule_from_tables(dummy, delta=(2, 41, 159), tau=(1, 40, 157), Delta=(2, 648))
    ceiling = min(-16 * 2, 2 * hand.gamma_exponent(1))
    assert ceiling == -70
    assert hand.gamma_exponent(2) == -70
    assert hand.final_conditions(2)["leak"]
    # one smaller drop value misses the ceiling
    worse = schedule_from_tables(dummy, delta=(2, 41, 159), tau=(1, 40, 156), Delta=(2, 648))
    assert worse.gamma_exponent(2) == -69
    assert not worse.final_conditions(2)["leak"]


def test_asymptotic_frozen_small(psi):
    sched = build_schedule("asymptotic", psi, 2)
    assert sched.delta == (1, 21, 81)
    assert sched.tau == (1, 20, 79)
    assert sched.Delta == (2, 336, 672)
    assert sched.gamma_exponents == {1: -16, 2: -32}
    for k in (1, 2):
        assert all(sched.final_conditions(k).values())


def test_asymptotic_tau_decrement_breaks(psi):
    sched = build_schedule("asymptotic", psi, 2)
    for k in (1, 2):
        tau = list(sched.tau)
        tau[k] -= 1
        weaker = Schedule(psi, "asymptotic", sched.n, sched.delta, tuple(tau), sched.Delta)
        assert not weaker.final_conditions(k)["leak"]


def test_structural_frozen_six_bands(structural):
    assert structural.n == (0, 1, 2, 3, 4, 6, 7, 9)
    assert structural.delta == (1, 3, 5, 7, 9, 11, 13)
    assert structural.tau == (1, 2, 3, 4, 5, 6, 7)
    assert structural.Delta == (2, 32, 64, 128, 256, 512, 1024)


def test_structural_least_multiple(structural, psi):
    threshold = (1 + 3) * structural.delta[psi.psi2(1)] + 4 * structural.n[2] + 2
    step = 2 * structural.Delta[0]
    assert structural.Delta[1] % step == 0
    assert structural.Delta[1] > threshold
    assert structural.Delta[1] - step <= threshold


def test_delta_slack_spreads_blocks(psi, structural):
    spread = build_schedule("structural", psi, 3, delta_slack=3)
    assert spread.Delta[1] > structural.Delta[1]


def test_schedule_tamper_rejected(structural, psi):
    bad = dataclasses.replace(structural, Delta=(2, 34, 64, 128, 256, 512, 1024))
    with pytest.raises(ValidationError):
        bad.validate()
    bad = dataclasses.replace(structural, delta=(1, 3, 3, 7, 9, 11, 13))
    with pytest.raises(ValidationError):
        bad.validate()
    bad = dataclasses.replace(structural, n=(0, 2) + structural.n[2:])
    with pytest.raises(ValidationError):
        bad.validate()


def test_schedule_input_guards(psi):
    with pytest.raises(ConfigError):
        build_schedule("heuristic", psi, 2)
    with pytest.raises(ConfigError):
        build_schedule("structural", psi, 2, seeds=(0, 1, 2))
    with pytest.raises(ConfigError):
        build_schedule("structural", psi, 2, seeds=(1, 1, 1))
    short = build_psi(1, 2, 1, 2)
    with pytest.raises(ConfigError):
        build_schedule("structural", short, 3)
    with pytest.raises(ConfigError):
        build_schedule("structural", psi, 2, delta_slack=0)


def test_schedule_json_round(structural):
    payload = structural.to_json_dict()
    text = json.dumps(payload, sort_keys=True)
    back = json.loads(text)
    assert back["delta"] == [1, 3, 5, 7, 9, 11, 13]
    assert back["gamma_exponents"]["1"] == structural.gamma_exponent(1)
    assert back["psi"]["table"][2] == [1, 3]


# ---------------------------------------------------------------------------
# realized parameters


def test_realize_frozen_tables(params):
    assert params.b == (0, 2, 34, 98, 226, 482, 738, 1250, 2274, 3298)
    assert params.band == (0, 1, 2, 3, 4, 4, 5, 6, 6)
    assert params.phi == (0, 0, 0, 0, 0, 1, 0, 0, 1)
    assert params.feedback_exp == (None, -3, -3, -4, -4, -4, -5, -5, -5)
    assert params.boundaries[0] is None


def test_seed_block_is_flat(params):
    assert params.weight_exponent(0, 1) == 0
    assert params.product_exponent(0) == 0


def test_boundaries_tile_and_product_identity(params, structural):
    for n in range(1, params.n_max + 1):
        length = params.block_length(n)
        a, b, c, d = params.boundaries[n]
        assert 1 <= a < b <= c < d < length
        k = params.band[n]
        expected = k * structural.delta[structural.psi.psi2(k)]
        # dual route: term-by-term sum of weight exponents
        brute = sum(params.weight_exponent(n, i) for i in range(1, length))
        assert brute == expected
        assert params.product_exponent(n) == expected


def test_multiple_condition_explicit(params):
    for n in range(1, params.n_max + 1):
        target_length = params.block_length(params.phi[n])
        assert params.block_length(n) % (2 * target_length) == 0


def test_log2prod_segments(params):
    a, b, c, d = params.boundaries[1]
    assert a == 8 and b == 14 and c == 22 and d == 27
    assert params.log2prod(1, 1, 3) == 2
    assert params.log2prod(1, b, c) == -(c - b)
    assert params.log2prod(1, 5, 5) == 0
    assert params.log2prod(1, -10, 1) == 0
    # clipping beyond the weight range changes nothing
    assert params.log2prod(1, -5, 10**6) == params.product_exponent(1)


def test_boundedness_certificate(params):
    assert params.boundedness_certificate() == 0
    assert all(params.product_exponent(n) > 0 for n in range(1, params.n_max + 1))


def test_phi_preimage_counts(params):
    assert params.phi_preimage_counts() == {0: 6, 1: 2}


def test_realize_guards(structural):
    with pytest.raises(ConfigError):
        realize_params(structural, structural.n[7])
    with pytest.raises(ConfigError):
        realize_params(structural, -1)


def test_params_tamper_rejected(params):
    edges = list(params.b)
    edges[3] += 1
    with pytest.raises(ValidationError):
        dataclasses.replace(params, b=tuple(edges)).validate()
    phi = list(params.phi)
    phi[5] = 2
    with pytest.raises(ValidationError):
        dataclasses.replace(params, phi=tuple(phi)).validate()
    feed = list(params.feedback_exp)
    feed[3] = feed[3] + 1
    with pytest.raises(ValidationError):
        dataclasses.replace(params, feedback_exp=tuple(feed)).validate()
    bounds = list(params.boundaries)
    a, b, c, d = bounds[2]
    bounds[2] = (a + 1, b, c, d)
    with pytest.raises(ValidationError):
        dataclasses.replace(params, boundaries=tuple(bounds)).validate()
    band = list(params.band)
    band[4] = 3
    with pytest.raises(ValidationError):
        dataclasses.replace(params, band=tuple(band)).validate()


def test_params_json(params):
    payload = params.to_json_dict()
    text = json.dumps(payload, sort_keys=True)
    back = json.loads(text)
    assert back["block_edges"][-1] == 3298
    assert back["feedback_exponents"][0] is None


# ---------------------------------------------------------------------------
# vectors


def test_sparsevec_drops_zeros_and_validates():
    vec = SparseVec({0: 3, 5: mpq(0), 7: DyadicScalar.zero()})
    assert vec.support() == (0,)
    cancel = SparseVec({2: 1}) + SparseVec({2: -1})
    assert cancel.is_zero()
    assert cancel.entries == {}
    with pytest.raises(ConfigError):
        SparseVec({0: 0.5})
    with pytest.raises(ConfigError):
        SparseVec({-1: 1})


def test_sparsevec_norm_and_equality():
    vec = SparseVec({0: DyadicScalar(1, -1), 3: -2, 9: mpq(1, 3)})
    assert vec.norm() == mpq(1, 2) + 2 + mpq(1, 3)
    assert SparseVec({0: DyadicScalar(1, -1)}) == SparseVec({0: mpq(1, 2)})
    assert SparseVec({0: 1}) != SparseVec({1: 1})
    assert vec.scale(-2).norm() == 2 * vec.norm()


# ---------------------------------------------------------------------------
# action


def test_apply_matches_definition_cases(params):
    # forward shift in the seed block, weight 1
    assert apply(params, SparseVec.basis(0)) == SparseVec({1: 1})
    # last coordinate of the seed block: negated origin
    assert apply(params, SparseVec.basis(1)) == SparseVec({0: -1})
    # last coordinate of block 1: feedback plus product-inverse pullback
    out = apply(params, SparseVec.basis(params.b[2] - 1))
    assert out == SparseVec(
        {0: DyadicScalar(1, -3), params.b[1]: DyadicScalar(-1, -5)}
    )


def test_apply_forward_uses_next_offset_weight(params):
    b1 = params.b[1]
    assert apply(params, SparseVec.basis(b1)) == SparseVec({b1 + 1: DyadicScalar(1, 1)})
    a, b, c, d = params.boundaries[1]
    halving = b1 + b - 1
    assert apply(params, SparseVec.basis(halving)) == SparseVec(
        {halving + 1: DyadicScalar(1, -1)}
    )


def test_apply_linearity(small_params):
    rng = random.Random(20260822)
    horizon = small_params.b[-1]
    for _ in range(30):
        x = SparseVec(
            {rng.randrange(horizon): mpq(rng.randint(-9, 9), rng.randint(1, 7)) for _ in range(5)}
        )
        y = SparseVec(
            {rng.randrange(horizon): rng.randint(-20, 20) for _ in range(4)}
        )
        assert apply(small_params, x + y) == apply(small_params, x) + apply(small_params, y)
        assert apply_power(small_params, x + y, 7) == apply_power(
            small_params, x, 7
        ) + apply_power(small_params, y, 7)


def test_apply_power_identity_and_periodicity(small_params):
    vec = SparseVec({0: 1, 5: mpq(2, 3)})
    assert apply_power(small_params, vec, 0) == vec
    for n in range(small_params.n_max + 1):
        period = 2 * small_params.block_length(n)
        for j in (small_params.b[n], small_params.b[n + 1] - 1):
            basis = SparseVec.basis(j)
            assert apply_power(small_params, basis, period) == basis


def test_orbit_scalars_stay_dyadic(params):
    x = SparseVec.basis(params.b[2] - 1)
    for _ in range(200):
        x = apply(params, x)
        assert all(isinstance(v, DyadicScalar) for v in x.entries.values())


def test_support_locality(small_params):
    rng = random.Random(7)
    edge = small_params.b[3]
    for _ in range(20):
        x = SparseVec({rng.randrange(edge): rng.randint(-5, 5) for _ in range(6)})
        image = apply(small_params, x)
        assert all(i < edge for i in image.entries)


def test_support_out_of_range(params):
    with pytest.raises(SupportOutOfRange):
        apply(params, SparseVec.basis(params.b[-1]))
    with pytest.raises(ConfigError):
        apply_power(params, SparseVec.basis(0), -1)


def test_orbit_rows_shape(small_params):
    rows = orbit_rows(small_params, 1, 3)
    assert rows[0] == (0, 1, 1, 0)
    assert rows[1] == (1, 0, -1, 0)
    assert rows[2] == (2, 1, -1, 0)
    assert rows[3] == (3, 0, 1, 0)
    steps = [r[0] for r in rows]
    assert steps == sorted(steps)
    with pytest.raises(ConfigError):
        orbit_rows(small_params, 0, -1)


# ---------------------------------------------------------------------------
# block projections


def test_project_block(params):
    vec = SparseVec({0: 1, params.b[1]: 2, params.b[1] + 3: mpq(1, 2), params.b[2]: 7})
    inside = project_block(vec, 1, params)
    assert inside == SparseVec({params.b[1]: 2, params.b[1] + 3: mpq(1, 2)})
    assert project_block(vec, 3, params).is_zero()


def test_block_functional_examples(params, structural):
    for l in (1, 2, 5):
        k = params.band[l]
        expected_exp = k * structural.delta[structural.psi.psi2(k)]
        start = SparseVec.basis(params.b[l])
        assert block_functional(start, l, params) == mpq(2) ** expected_exp
        end = SparseVec.basis(params.b[l + 1] - 1)
        assert block_functional(end, l, params) == 1
        assert block_functional(start, l + 1, params) == 0


def test_block_functional_additive_over_magnitudes(params):
    l = 2
    lo = params.b[l]
    vec = SparseVec({lo: 1, lo + 1: -1})
    separate = block_functional(SparseVec({lo: 1}), l, params) + block_functional(
        SparseVec({lo + 1: 1}), l, params
    )
    assert block_functional(vec, l, params) == separate
