"""Constructive weight synthesis.

Three constructions turn index sets into admissible weight sequences.

The single-set synthesis picks consecutive blocks of strictly increasing
length on which the set keeps density at least ``(1 - 2^-k) * delta``,
``delta`` being a caller-supplied target for the set's upper density.
The block-constant weight over those breakpoints gives every block total
mass 1, so prefix quotients become averages of per-block densities and
the weighted lower density climbs toward ``delta``.  Convergence is as
slow as the number of blocks grows: reaching within ``eps`` of ``delta``
needs on the order of ``delta/eps`` blocks, so callers chasing tight
tolerances must allow horizons where that many blocks fit.

The multi-set variant runs the same block search for finitely many sets
at once, interleaved along a partition of the block indices in which
each part has bounded gaps; each set then keeps a positive weighted
lower density, at least its target divided by its gap bound.

The window scan computes the minimal non-decreasing integer sequence
``alpha_n`` making the mass of ``[n, (1+alpha_n) n)`` at least half the
whole prefix mass up to and including ``(1+alpha_n) n``.  Orbit-hitting
arguments consume these window sizes later.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from gmpy2 import mpq

from .densities import (
    BlockConstantWeight,
    BlockSet,
    IndexSet,
    WeightSeq,
    estimate_densities,
)
from .errors import ConfigError, HorizonExhausted, ScanExhausted, ValidationError
from .exactnum import ExactScalar, exact, format_exact

__all__ = [
    "BlockPlan",
    "synthesize_weight_thm1",
    "PartitionWithBoundedGaps",
    "round_robin_partition",
    "synthesize_weight_multi",
    "multi_plan_report",
    "AlphaSequence",
    "alpha_sequence",
    "DEFAULT_ALPHA_CAP",
]

DEFAULT_ALPHA_CAP = 10**6


# ---------------------------------------------------------------------------
# block plans


@dataclass(frozen=True)
class BlockPlan:
    """Breakpoints with per-block density floors and exact counts."""

    breakpoints: tuple[int, ...]
    floors: tuple[ExactScalar, ...]
    counts: tuple[int, ...]

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.breakpoints, self.breakpoints[1:]))

    def block_count(self) -> int:
        return len(self.breakpoints) - 1

    def verify(self, index_set: IndexSet) -> None:
        """Recount every block and re-check floors and length growth."""
        if self.breakpoints[0] != 0:
            raise ValidationError("plans start at 0")
        lengths = self.lengths
        for i, (a, b) in enumerate(zip(lengths, lengths[1:])):
            if b <= a:
                raise ValidationError(f"block {i + 1} does not grow")
        for k, (start, end) in enumerate(zip(self.breakpoints, self.breakpoints[1:])):
            count = index_set.count_range(start, end)
            if count != self.counts[k]:
                raise ValidationError(f"block {k} count mismatch: {count} != {self.counts[k]}")
            if mpq(count, end - start) < self.floors[k]:
                raise ValidationError(f"block {k} misses its floor")

    def to_weight(self) -> BlockConstantWeight:
        return BlockConstantWeight(self.breakpoints)

    def to_json_dict(self) -> dict:
        return {
            "breakpoints": list(self.breakpoints),
            "floors": [format_exact(f) for f in self.floors],
            "certificates": [
                {
                    "block": k,
                    "start": start,
                    "end": end,
                    "count": self.counts[k],
                    "length": end - start,
                    "density": format_exact(mpq(self.counts[k], end - start)),
                    "floor": format_exact(self.floors[k]),
                }
                for k, (start, end) in enumerate(zip(self.breakpoints, self.breakpoints[1:]))
            ],
        }


# ---------------------------------------------------------------------------
# block search

# The search for one block: given its start, the minimal admissible end
# (strict length growth) and a density floor p/q, find the smallest end
# not beyond the horizon with count(start, end) * q >= (end - start) * p.


def _scan_unit(index_set: IndexSet, start: int, min_end: int, horizon: int,
               floor: ExactScalar) -> int | None:
    p, q = floor.numerator, floor.denominator
    if p <= 0:
        return min_end if min_end <= horizon else None
    count = index_set.count_range(start, min_end)
    end = min_end
    while end <= horizon:
        if count * q >= (end - start) * p:
            return end
        if index_set.member(end):
            count += 1
        end += 1
    return None


def _scan_runs(index_set: BlockSet, start: int, min_end: int, horizon: int,
               floor: ExactScalar) -> int | None:
    # same answer as the unit scan, but jumping run and gap segments of a
    # block-built set in one step each; the qualification margin
    # g(e) = q * count(start, e) - p * (e - start) is linear on segments
    p, q = int(floor.numerator), int(floor.denominator)
    if p <= 0:
        return min_end if min_end <= horizon else None
    if min_end > horizon:
        return None
    knots = {min_end, horizon + 1}
    for s, e in index_set.blocks_within(horizon + 1):
        for v in (s, e):
            if min_end < v <= horizon:
                knots.add(v)
    points = sorted(knots)
    for u, v in zip(points, points[1:]):
        g_u = q * index_set.count_range(start, u) - p * (u - start)
        if g_u >= 0:
            return u
        slope = (q - p) if index_set.member(u) else -p
        if slope > 0:
            cross = u + (-g_u + slope - 1) // slope
            if cross < v:
                return cross
    g_h = q * index_set.count_range(start, horizon) - p * (horizon - start)
    return horizon if g_h >= 0 else None


def _find_block_end(index_set: IndexSet, start: int, min_end: int, horizon: int,
                    floor: ExactScalar) -> int | None:
    if isinstance(index_set, BlockSet):
        return _scan_runs(index_set, start, min_end, horizon, floor)
    return _scan_unit(index_set, start, min_end, horizon, floor)


def synthesize_weight_thm1(
    index_set: IndexSet,
    delta: ExactScalar,
    horizon: int,
    min_blocks: int | None = None,
) -> tuple[BlockPlan, WeightSeq]:
    """Single-set synthesis: blocks of floor ``(1 - 2^-k) * delta``.

    Greedy and leftmost: each block takes the smallest qualifying right
    endpoint, subject to strictly growing lengths.  Synthesis stops
    cleanly once the next block cannot fit below the horizon at all;
    if there was room to search but no endpoint qualified, the horizon
    is exhausted, which signals that ``delta`` overestimates the set's
    upper density or that the horizon is too small.  A caller content
    with a partial tiling may pass ``min_blocks``: a failed search after
    at least that many blocks then completes the plan instead of
    raising, which matters for sets whose qualifying blocks are sparse
    enough that most horizons interrupt one mid-search.
    """
    delta = exact(delta)
    if not (0 < delta <= 1):
        raise ConfigError("delta must lie in (0, 1]")
    if horizon < 1:
        raise ConfigError("horizon must be at least 1")
    breakpoints = [0]
    floors: list[ExactScalar] = []
    counts: list[int] = []
    prev_len = 0
    k = 0
    while True:
        start = breakpoints[-1]
        min_end = start + prev_len + 1
        if min_end > horizon:
            break
        floor = (1 - mpq(1, 2**k)) * delta
        end = _find_block_end(index_set, start, min_end, horizon, floor)
        if end is None:
            if min_blocks is not None and k >= min_blocks:
                break
            raise HorizonExhausted(k)
        breakpoints.append(end)
        floors.append(floor)
        counts.append(index_set.count_range(start, end))
        prev_len = end - start
        k += 1
    plan = BlockPlan(tuple(breakpoints), tuple(floors), tuple(counts))
    weight = plan.to_weight()
    adm = weight.admissibility()
    if not adm.ok:
        raise ValidationError(f"synthesized weight not admissible: {adm.reason}")
    return plan, weight


# ---------------------------------------------------------------------------
# multi-set synthesis


class PartitionWithBoundedGaps:
    """Assignment of block indices 1, 2, ... to parts 1..parts.

    Each part must occur with gaps no larger than its bound; then the
    j-th block index of part n is at most j times that bound, which is
    what turns per-part block mass into a positive density floor.
    """

    def __init__(
        self,
        parts: int,
        assign: Callable[[int], int],
        gap_bounds: Sequence[int],
        kind: str = "custom",
    ):
        parts = int(parts)
        if parts < 1:
            raise ConfigError("need at least one part")
        if len(gap_bounds) != parts:
            raise ConfigError("one gap bound per part")
        if any(int(r) < 1 for r in gap_bounds):
            raise ConfigError("gap bounds must be positive")
        self.parts = parts
        self._assign = assign
        self.gap_bounds = tuple(int(r) for r in gap_bounds)
        self.kind = kind

    def part_of(self, index: int) -> int:
        if index < 1:
            raise ConfigError("block indices start at 1")
        part = self._assign(index)
        if not (1 <= part <= self.parts):
            raise ValidationError(f"assignment sent index {index} to invalid part {part}")
        return part

    def members_of(self, part: int, up_to: int) -> list[int]:
        return [l for l in range(1, up_to + 1) if self.part_of(l) == part]

    def verify(self, up_to: int) -> None:
        """Check occupancy, gap bounds, and the enumeration inequality."""
        for part in range(1, self.parts + 1):
            members = self.members_of(part, up_to)
            bound = self.gap_bounds[part - 1]
            if not members:
                raise ValidationError(f"part {part} never occurs up to {up_to}")
            prev = 0
            for j, l in enumerate(members, start=1):
                if l - prev > bound:
                    raise ValidationError(f"part {part} gap {l - prev} exceeds {bound}")
                if l > j * bound:
                    raise ValidationError(f"part {part} element {l} exceeds {j} * {bound}")
                prev = l

    def describe(self) -> dict:
        return {"kind": self.kind, "parts": self.parts, "gap_bounds": list(self.gap_bounds)}


def round_robin_partition(parts: int) -> PartitionWithBoundedGaps:
    return PartitionWithBoundedGaps(
        parts,
        lambda index: (index - 1) % parts + 1,
        (parts,) * parts,
        kind="round_robin",
    )


def synthesize_weight_multi(
    sets: Sequence[IndexSet],
    deltas: Sequence[ExactScalar],
    partition: PartitionWithBoundedGaps,
    horizon: int,
) -> WeightSeq:
    """Interleaved synthesis: block index ``l`` serves its part's set.

    The block of index ``l`` must carry density at least
    ``(1 - 2^-l) * delta`` for the set its part serves; block 0 is the
    unconstrained seed ``[0, 1)``.  Every part must receive at least one
    block below the horizon.
    """
    plan = _multi_plan(sets, deltas, partition, horizon)
    return BlockConstantWeight(plan["breakpoints"])


def _multi_plan(sets, deltas, partition, horizon) -> dict:
    if len(sets) != partition.parts or len(deltas) != partition.parts:
        raise ConfigError("sets, deltas, and partition parts must align")
    deltas = [exact(d) for d in deltas]
    if any(not (0 < d <= 1) for d in deltas):
        raise ConfigError("each delta must lie in (0, 1]; empty sets have none")
    if horizon < 2:
        raise ConfigError("horizon too small to place any block")
    breakpoints = [0, 1]  # unconstrained seed block
    owners = [0]
    counts = [sets[0].count_range(0, 1)]
    floors: list[ExactScalar] = [mpq(0)]
    prev_len = 1
    l = 1
    while True:
        start = breakpoints[-1]
        min_end = start + prev_len + 1
        if min_end > horizon:
            break
        part = partition.part_of(l)
        target = sets[part - 1]
        floor = (1 - mpq(1, 2**l)) * deltas[part - 1]
        end = _find_block_end(target, start, min_end, horizon, floor)
        if end is None:
            raise HorizonExhausted(l, part=part)
        breakpoints.append(end)
        owners.append(part)
        counts.append(target.count_range(start, end))
        floors.append(floor)
        prev_len = end - start
        l += 1
    partition.verify(l - 1)
    return {
        "breakpoints": breakpoints,
        "owners": owners,
        "counts": counts,
        "floors": floors,
    }


def multi_plan_report(
    sets: Sequence[IndexSet],
    deltas: Sequence[ExactScalar],
    partition: PartitionWithBoundedGaps,
    horizon: int,
) -> dict:
    """Synthesis plus per-part certificates and finite-horizon estimates.

    Also evaluates the interleaving bound: for part n with block indices
    l_1 < l_2 < ..., the quotient at the boundary ``n_{l_{j+1}}`` is at
    least ``(j - 3) * delta_n / l_{j+1}``.
    """
    plan = _multi_plan(sets, deltas, partition, horizon)
    weight = BlockConstantWeight(plan["breakpoints"])
    deltas = [exact(d) for d in deltas]
    parts_payload = []
    for part in range(1, partition.parts + 1):
        indices = [l for l, owner in enumerate(plan["owners"]) if owner == part]
        report = estimate_densities(sets[part - 1], weight, horizon)
        bound_checks = []
        for j in range(1, len(indices)):
            l_next = indices[j]
            boundary = plan["breakpoints"][l_next]
            q = density_quotient_cached(sets[part - 1], weight, boundary)
            lower = mpq(j - 3, 1) * deltas[part - 1] / l_next
            bound_checks.append(
                {
                    "j": j,
                    "block_index": l_next,
                    "boundary": boundary,
                    "quotient": format_exact(q),
                    "bound": format_exact(lower),
                    "holds": bool(q >= lower),
                }
            )
        gap_bound = partition.gap_bounds[part - 1]
        parts_payload.append(
            {
                "part": part,
                "block_indices": indices,
                "target_floor": format_exact(deltas[part - 1] / gap_bound),
                "lower_estimate": format_exact(report.lower_estimate),
                "upper_estimate": format_exact(report.upper_estimate),
                "boundary_bounds": bound_checks,
            }
        )
    return {
        "breakpoints": plan["breakpoints"],
        "owners": plan["owners"],
        "partition": partition.describe(),
        "parts": parts_payload,
    }


def density_quotient_cached(index_set, weight, horizon):
    # local import avoided; tiny wrapper kept for readability at call sites
    from .densities import density_quotient

    return density_quotient(index_set, weight, horizon)


# ---------------------------------------------------------------------------
# window scan


class AlphaSequence:
    """Minimal non-decreasing window factors for the half-mass condition.

    ``alpha_n`` is the least integer, at least 1 and at least the
    previous value, with

        sum of a_k over [n, (1+alpha_n) n)
          >= half of the sum of a_k over [0, (1+alpha_n) n],

    both sides exact.  Values extend on demand; an admissible weight
    guarantees termination of each scan, and a cap turns runaway scans
    into errors instead of hangs.
    """

    def __init__(self, weight: WeightSeq, cap: int = DEFAULT_ALPHA_CAP):
        adm = weight.admissibility()
        if not adm.ok:
            raise ConfigError(f"weight must be admissible: {adm.reason}")
        self.weight = weight
        self.cap = cap
        self._values: list[int] = []
        self._psum_cache: dict[int, ExactScalar] = {}

    def _prefix(self, n: int) -> ExactScalar:
        cached = self._psum_cache.get(n)
        if cached is None:
            cached = self.weight.prefix_sum(n)
            self._psum_cache[n] = cached
        return cached

    def window_holds(self, n: int, alpha: int) -> bool:
        top = (1 + alpha) * n
        window = self._prefix(top) - self._prefix(n)
        return 2 * window >= self._prefix(top + 1)

    def value_at(self, n: int) -> int:
        if n < 1:
            raise ConfigError("window indices start at 1")
        while len(self._values) < n:
            m = len(self._values) + 1
            alpha = max(self._values[-1], 1) if self._values else 1
            while not self.window_holds(m, alpha):
                alpha += 1
                if alpha > self.cap:
                    raise ScanExhausted(m)
            self._values.append(alpha)
        return self._values[n - 1]

    def values(self, n_max: int) -> tuple[int, ...]:
        self.value_at(n_max)
        return tuple(self._values[:n_max])

    def verify(self, n_max: int) -> None:
        vals = self.values(n_max)
        for prev, cur in zip(vals, vals[1:]):
            if cur < prev:
                raise ValidationError("window factors decreased")
        for n, alpha in enumerate(vals, start=1):
            if alpha < 1 or not self.window_holds(n, alpha):
                raise ValidationError(f"window condition fails at {n}")

    def decrement_breaks(self, n: int) -> bool:
        """True when lowering alpha_n is impossible: either the floor
        (previous value, or 1) is hit or the window condition fails."""
        alpha = self.value_at(n)
        floor = max(self.value_at(n - 1), 1) if n > 1 else 1
        if alpha - 1 < floor:
            return True
        return not self.window_holds(n, alpha - 1)


def alpha_sequence(weight: WeightSeq, n_max: int, cap: int = DEFAULT_ALPHA_CAP) -> AlphaSequence:
    if n_max < 1:
        raise ConfigError("need n_max >= 1")
    seq = AlphaSequence(weight, cap)
    seq.value_at(n_max)
    return seq
