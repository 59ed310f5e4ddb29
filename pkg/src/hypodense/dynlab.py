"""Dynamics experiments on the block-feedback operator.

Four instruments, all exact:

- shadowing: given a finitely supported vector and a tolerance, build a
  small companion vector whose orbit reproduces the orbit of the given
  one after a fixed delay, certified by exact norm inequalities;
- leak bounds: how much mass a block can emit toward lower blocks, with
  per-block leak constants checked against the feedback data;
- flat-run counting: on a block with a long stretch of weight one, lower
  bound the fraction of times the block functional stays large;
- hitting sets: exact visit sets of orbits into balls, fed into the
  weighted density estimators, plus a finite rendering of the chain
  between plain and weighted density estimates.

Everything here works on realized parameters over a finite horizon; the
infinitary parts of the ambient arguments (inductions over dense
sequences, extraction of infinitely many scales) are out of scope and
the reports say so rather than approximating them.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from .ctype import (
    CTypeParams,
    SparseVec,
    _scale_pow2,
    apply,
    apply_power,
    block_functional,
    project_block,
)
from .densities import (
    DensityReport,
    ExplicitSet,
    UnitWeight,
    WeightSeq,
    estimate_densities,
    monotonicity_check,
)
from .errors import (
    ConfigError,
    HypothesisViolated,
    NoFeasibleLevel,
    NoFeasibleStep,
    SupportOutOfRange,
)
from .exactnum import DyadicScalar, ExactScalar, PowerOfTwo, exact, format_exact
from .weightforge import AlphaSequence

__all__ = [
    "ShadowingCertificate",
    "build_shadowing_vector",
    "gamma_leak_constants",
    "prop50_check",
    "prop51_bound",
    "prop51_check",
    "flat_run",
    "HittingReport",
    "hitting_density",
    "SetIdentityReport",
    "set_identity_check",
]


def _pow2(exponent: int) -> ExactScalar:
    if exponent >= 0:
        return mpq(2**exponent)
    return mpq(1, 2**-exponent)


def _checked_positive(value, name: str):
    if isinstance(value, float):
        raise ConfigError(f"{name} must be exact, not float")
    if isinstance(value, DyadicScalar):
        if value.sign() <= 0:
            raise ConfigError(f"{name} must be positive")
        return value
    value = exact(value)
    if value <= 0:
        raise ConfigError(f"{name} must be positive")
    return value


# ---------------------------------------------------------------------------
# shadowing


@dataclass(frozen=True)
class ShadowingCertificate:
    """Companion vector z with its exactly-verified orbit guarantees.

    ``z`` is tiny (norm below epsilon) yet after ``n`` steps its orbit
    follows the orbit of ``x`` for ``m_max`` further steps, again within
    epsilon.  ``K`` is the ladder level the construction rides on, ``k``
    the band whose blocks host z, and ``n = 2 * delta[K]`` the delay.
    Both inequalities are exact scalar comparisons, no tolerance.
    """

    x: SparseVec
    epsilon: ExactScalar
    K: int
    k: int
    n: int
    z: SparseVec
    norm_z: ExactScalar
    max_orbit_error: ExactScalar
    m_max: int
    alpha_value: int
    tail_identity_ok: bool
    floor_bound_ok: bool

    @property
    def holds(self) -> bool:
        return (
            self.norm_z < self.epsilon
            and self.max_orbit_error < self.epsilon
            and self.tail_identity_ok
            and self.floor_bound_ok
        )

    def to_json_dict(self) -> dict:
        return {
            "epsilon": format_exact(self.epsilon),
            "level": self.K,
            "band": self.k,
            "delay": self.n,
            "orbit_window": self.m_max,
            "alpha_value": self.alpha_value,
            "z_support": list(self.z.support()),
            "norm_z": format_exact(self.norm_z),
            "max_orbit_error": format_exact(self.max_orbit_error),
            "tail_identity_ok": self.tail_identity_ok,
            "floor_bound_ok": self.floor_bound_ok,
            "holds": self.holds,
        }


def build_shadowing_vector(
    params: CTypeParams,
    x: SparseVec,
    epsilon,
    alpha: AlphaSequence,
) -> ShadowingCertificate:
    """Delayed-orbit companion of ``x`` with exact certificates.

    The search picks the smallest ladder level ``K`` whose run/drop gap
    beats the size inequality ``norm(x) * 2**(2*b0) < epsilon * 2**(delta - tau)``
    (``b0`` the first block edge past the support of ``x``), then the
    smallest band ``k`` carrying the pair (support width, K) that is
    long enough for the requested orbit window ``alpha(2 delta) * 2 delta``
    and fully realized.  z places one coordinate per support coordinate
    of ``x``, near the end of the matching block of band ``k``, scaled so
    that the block's feedback reproduces ``x``'s coordinates exactly.
    """
    epsilon = _checked_positive(epsilon, "epsilon")
    schedule = params.schedule

    support = x.support()
    top = support[-1] if support else -1
    k0 = None
    idx = 1
    while idx < len(schedule.n) and schedule.n[idx] <= params.n_max + 1:
        if top < params.b[schedule.n[idx]]:
            k0 = idx
            break
        idx += 1
    if k0 is None:
        raise SupportOutOfRange("support of x does not fit below a realized band start")
    width = schedule.n[k0]
    b0 = params.b[width]
    norm_x = x.norm()

    level_found = False
    chosen = None
    for K in range(1, schedule.levels + 1):
        gap = schedule.delta[K] - schedule.tau[K]
        if schedule.delta[K] <= b0:
            continue
        if not (norm_x * _pow2(2 * b0) < epsilon * _pow2(gap)):
            continue
        level_found = True
        a_val = alpha.value_at(2 * schedule.delta[K])
        for k in range(1, schedule.k_max + 1):
            if schedule.psi.pair(k) != (width, K):
                continue
            if k < 2 * a_val + 1:
                continue
            if schedule.n[k + 1] - 1 > params.n_max:
                continue
            chosen = (K, k, a_val)
            break
        if chosen:
            break
    if chosen is None:
        if not level_found:
            raise NoFeasibleLevel(
                f"no ladder level beats the size inequality for epsilon {epsilon}"
            )
        raise NoFeasibleStep(
            f"no realized band carries the pair ({width}, K) late enough"
        )
    K, k, a_val = chosen

    delta_K = schedule.delta[K]
    tau_K = schedule.tau[K]
    delay = 2 * delta_K
    m_max = a_val * delay

    # the two product identities the construction rides on, checked for
    # every block of the chosen band
    tail_ok = True
    floor_ok = True
    gap_power = PowerOfTwo(delta_K - tau_K)
    for block in range(schedule.n[k], schedule.n[k + 1]):
        length = params.block_length(block)
        feed = params.feedback_exp[block]
        if PowerOfTwo(feed + params.log2prod(block, length - delay, length)) != gap_power:
            tail_ok = False
        for m in range(m_max + 1):
            if feed + params.log2prod(block, m + 1, length) < delta_K - tau_K:
                floor_ok = False
                break

    entries = {}
    n_k = schedule.n[k]
    for j in support:
        l = params.block_of(j)
        offset = j - params.b[l]
        host = n_k + l
        length = params.block_length(host)
        target = params.b[host + 1] - delay + offset
        tail_exp = params.log2prod(host, length - delay + offset + 1, length)
        climb_exp = params.log2prod(l, 1, offset + 1)
        entries[target] = _scale_pow2(x.entries[j], tau_K - tail_exp - climb_exp)
    z = SparseVec(entries)

    norm_z = z.norm()
    shifted = apply_power(params, z, delay)
    chasing = x
    worst = mpq(0)
    for m in range(m_max + 1):
        err = (shifted - chasing).norm()
        if err > worst:
            worst = err
        if m < m_max:
            shifted = apply(params, shifted)
            chasing = apply(params, chasing)

    return ShadowingCertificate(
        x=x,
        epsilon=epsilon,
        K=K,
        k=k,
        n=delay,
        z=z,
        norm_z=norm_z,
        max_orbit_error=worst,
        m_max=m_max,
        alpha_value=a_val,
        tail_identity_ok=tail_ok,
        floor_bound_ok=floor_ok,
    )


# ---------------------------------------------------------------------------
# leak bounds


def _max_prefix_exponent(params: CTypeParams, block: int) -> int:
    # prefix products of a block climb on the initial doubling run, then
    # never rise above it again: flat, halving run, recovery by one run
    # of the same length as the final flat stretch
    bounds = params.boundaries[block]
    if bounds is None:
        return 0
    return bounds[0]


def gamma_leak_constants(params: CTypeParams, up_to: int) -> list:
    """Per-block leak constants taken from the schedule's leak exponents.

    Entry ``m`` bounds the feedback scale times the largest prefix
    product of the target block.  Index 0 is None (the seed block's
    feedback needs no constant).
    """
    if up_to > params.n_max:
        raise ConfigError(f"blocks realized only through {params.n_max}")
    sched = params.schedule
    out = [None]
    for m in range(1, up_to + 1):
        level = sched.psi.psi2(params.band[m])
        out.append(_pow2(sched.gamma_exponent(level)))
    return out


def prop50_check(
    params: CTypeParams,
    x: SparseVec,
    l: int,
    n: int,
    C: list,
    j_max: int,
) -> bool:
    """Exact leak bounds for the orbit of the block-l part of ``x``.

    Hypothesis, verified first for every block ``1 <= m <= l``: the
    feedback scale of block m times the largest prefix weight product of
    its target block is at most ``C[m]``, with ``C[m]`` strictly between
    0 and 1.  Then along the orbit of the block-l restriction, for every
    step ``j <= j_max``:

    (1) the mass seen in block ``n`` never exceeds ``C[l]`` times the
        end-carried block functional of ``x`` in block l;
    (2) for every window length ``N`` up to the block length, the mass
        seen in block ``n`` within the first N steps is at most ``C[l]``
        times the largest suffix weight product over the last N
        coordinates of block l, times the plain mass of the restriction.
    """
    if not (0 <= n < l <= params.n_max):
        raise ConfigError("need 0 <= n < l within the realized blocks")
    if j_max < 0:
        raise ConfigError("j_max must be nonnegative")
    if len(C) <= l:
        raise ConfigError(f"need constants for blocks 1..{l}")
    for m in range(1, l + 1):
        c_m = C[m]
        if isinstance(c_m, float):
            raise ConfigError("constants must be exact scalars")
        if not (0 < c_m < 1):
            raise HypothesisViolated(m, f"constant at block {m} is outside (0, 1)")
        lhs_exp = params.feedback_exp[m] + _max_prefix_exponent(params, params.phi[m])
        if not (_pow2(lhs_exp) <= c_m):
            raise HypothesisViolated(
                m, f"feedback times prefix products at block {m} exceed the constant"
            )

    restricted = project_block(x, l, params)
    functional = block_functional(x, l, params)
    plain = restricted.norm()
    ceiling = C[l] * functional

    length = params.block_length(l)
    norms = []
    y = restricted
    for j in range(j_max + 1):
        norms.append(project_block(y, n, params).norm())
        if j < j_max:
            y = apply(params, y)

    if any(value > ceiling for value in norms):
        return False

    # suffix-product factors, windows growing from the block's end
    best_exp = 0
    running = 0
    prefix_max = norms[0]
    for N in range(1, min(j_max, length) + 1):
        position = length - N
        if position + 1 <= length - 1:
            running += params.weight_exponent(l, position + 1)
            if running > best_exp:
                best_exp = running
        if norms[N] > prefix_max:
            prefix_max = norms[N]
        if prefix_max > C[l] * _pow2(best_exp) * plain:
            return False
    return True


# ---------------------------------------------------------------------------
# flat-run counting


def flat_run(params: CTypeParams, l: int) -> tuple[int, int]:
    """Offsets (K0, K1) with weight exactly one strictly between them."""
    if not (0 <= l <= params.n_max):
        raise ConfigError(f"blocks realized only through {params.n_max}")
    length = params.block_length(l)
    bounds = params.boundaries[l]
    if bounds is None:
        return 0, length
    return bounds[0], bounds[1]


def prop51_bound(block_length: int, K0: int, K1: int, J: int) -> ExactScalar:
    """Counting floor for blocks flat on (K0, K1): the fraction of steps
    up to J at which the in-block mass stays above half its ceiling."""
    if not (0 <= K0 < K1 <= block_length):
        raise ConfigError("need 0 <= K0 < K1 <= block_length")
    if J < 0:
        raise ConfigError("J must be nonnegative")
    spoiled = block_length - (K1 - K0)
    return 1 - 2 * spoiled * (mpq(1, J + 1) + mpq(1, block_length))


def prop51_check(params: CTypeParams, x: SparseVec, l: int, J: int) -> bool:
    """Count the steps whose in-block mass clears half the scaled
    functional, and compare the frequency against the counting floor."""
    if J < 0:
        raise ConfigError("J must be nonnegative")
    K0, K1 = flat_run(params, l)
    length = params.block_length(l)
    for offset in range(K0 + 1, K1):
        if params.weight_exponent(l, offset) != 0:
            raise ConfigError(f"block {l} is not flat on ({K0}, {K1})")
    alpha_exp = params.log2prod(l, K0 + 1, length)
    functional = block_functional(x, l, params)
    threshold = _scale_pow2(functional, -alpha_exp - 1)

    restricted = project_block(x, l, params)
    count = 0
    y = restricted
    for j in range(J + 1):
        if project_block(y, l, params).norm() >= threshold:
            count += 1
        if j < J:
            y = apply(params, y)
    return mpq(count, J + 1) >= prop51_bound(length, K0, K1, J)


# ---------------------------------------------------------------------------
# hitting sets


@dataclass(frozen=True)
class HittingReport:
    """Exact visit set of an orbit into a ball, with density estimates.

    ``period`` is the exact period of the center under the operator
    (every finitely supported vector is periodic here), and
    ``periodic_floor`` the reference value 1/(2 period); ``floor_met``
    records whether the upper density estimate clears it minus the
    tolerance.  The comparison is reported, not asserted: it is the
    expected behaviour when the orbit actually tracks the center, not a
    theorem about arbitrary inputs.
    """

    x: SparseVec
    center: SparseVec
    radius: ExactScalar
    step_horizon: int
    visits: tuple[int, ...]
    density: DensityReport
    period: int
    periodic_floor: ExactScalar
    floor_met: bool
    tolerance: ExactScalar

    def to_json_dict(self) -> dict:
        return {
            "radius": format_exact(self.radius),
            "step_horizon": self.step_horizon,
            "visit_count": len(self.visits),
            "visits": list(self.visits),
            "density": self.density.to_json_dict(),
            "period": self.period,
            "periodic_floor": format_exact(self.periodic_floor),
            "floor_met": self.floor_met,
            "tolerance": format_exact(self.tolerance),
        }

    def to_csv(self) -> str:
        return self.density.to_csv()


def _exact_period(params: CTypeParams, center: SparseVec) -> int:
    if center.is_zero():
        return 1
    candidate = 1
    for index in center.support():
        candidate = max(candidate, 2 * params.block_length(params.block_of(index)))
    if apply_power(params, center, candidate) != center:
        raise ConfigError("center fails its structural period; parameters corrupt")
    period = candidate
    for d in range(1, candidate + 1):
        if candidate % d == 0 and apply_power(params, center, d) == center:
            period = d
            break
    return period


def hitting_density(
    params: CTypeParams,
    x: SparseVec,
    center: SparseVec,
    radius,
    step_horizon: int,
    weight: WeightSeq,
    tolerance=mpq(1, 20),
) -> HittingReport:
    """Visit set {m <= step_horizon : norm(T^m x - center) < radius},
    decided by exact strict comparisons, then measured under ``weight``."""
    radius = _checked_positive(radius, "radius")
    tolerance = exact(tolerance)
    if step_horizon < 0:
        raise ConfigError("step_horizon must be nonnegative")
    visits = []
    y = x
    for m in range(step_horizon + 1):
        if (y - center).norm() < radius:
            visits.append(m)
        if m < step_horizon:
            y = apply(params, y)
    report = estimate_densities(ExplicitSet(visits), weight, step_horizon + 1)
    period = _exact_period(params, center)
    floor = mpq(1, 2 * period)
    return HittingReport(
        x=x,
        center=center,
        radius=radius,
        step_horizon=step_horizon,
        visits=tuple(visits),
        density=report,
        period=period,
        periodic_floor=floor,
        floor_met=report.upper_estimate >= floor - tolerance,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# density chain over finite families


@dataclass(frozen=True)
class IdentityRow:
    vector_index: int
    open_index: int
    weight_description: dict
    lower: ExactScalar
    upper: ExactScalar
    chain_ok: bool

    def to_json_dict(self) -> dict:
        return {
            "vector": self.vector_index,
            "open": self.open_index,
            "weight": self.weight_description,
            "lower": format_exact(self.lower),
            "upper": format_exact(self.upper),
            "chain_ok": self.chain_ok,
        }


@dataclass(frozen=True)
class SetIdentityReport:
    """Plain and weighted density estimates for each (vector, ball) pair.

    ``chain_ok`` per weighted row asserts the finite-horizon direction of
    the density comparisons: plain lower estimate <= weighted lower
    estimate (within tolerance), weighted lower <= weighted upper, and
    weighted upper <= plain upper estimate (within tolerance).  The
    corresponding identities over the entire family of admissible
    weights are limit statements and stay out of scope.
    """

    rows: tuple[IdentityRow, ...]
    all_chains_hold: bool
    scope_note: str

    def to_json_dict(self) -> dict:
        return {
            "rows": [row.to_json_dict() for row in self.rows],
            "all_chains_hold": self.all_chains_hold,
            "scope_note": self.scope_note,
        }


_SCOPE_NOTE = (
    "finite families of vectors, balls, and weights at a finite horizon; "
    "the identities over the full admissible family are out of scope"
)


def set_identity_check(
    vectors: list,
    weights: list,
    opens: list,
    params: CTypeParams,
    step_horizon: int,
    tolerance=mpq(1, 20),
) -> SetIdentityReport:
    if step_horizon < 0:
        raise ConfigError("step_horizon must be nonnegative")
    tolerance = exact(tolerance)
    checked_opens = []
    for center, radius in opens:
        checked_opens.append((center, _checked_positive(radius, "radius")))

    unit = UnitWeight()
    horizon = step_horizon + 1
    rows = []
    all_ok = True
    for vi, x in enumerate(vectors):
        visit_lists = [[] for _ in checked_opens]
        y = x
        for m in range(step_horizon + 1):
            for oi, (center, radius) in enumerate(checked_opens):
                if (y - center).norm() < radius:
                    visit_lists[oi].append(m)
            if m < step_horizon:
                y = apply(params, y)
        for oi, visits in enumerate(visit_lists):
            index_set = ExplicitSet(visits)
            plain = estimate_densities(index_set, unit, horizon)
            rows.append(
                IdentityRow(
                    vector_index=vi,
                    open_index=oi,
                    weight_description=unit.describe(),
                    lower=plain.lower_estimate,
                    upper=plain.upper_estimate,
                    chain_ok=plain.lower_estimate <= plain.upper_estimate,
                )
            )
            for a in weights:
                comparison = monotonicity_check(index_set, a, unit, horizon, tolerance)
                ok = comparison.chain_holds and comparison.lower_a <= comparison.upper_a
                all_ok = all_ok and ok
                rows.append(
                    IdentityRow(
                        vector_index=vi,
                        open_index=oi,
                        weight_description=a.describe(),
                        lower=comparison.lower_a,
                        upper=comparison.upper_a,
                        chain_ok=ok,
                    )
                )
    return SetIdentityReport(tuple(rows), all_ok, _SCOPE_NOTE)
