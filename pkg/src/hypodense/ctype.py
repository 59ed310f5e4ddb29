"""A block-feedback weighted shift on finitely supported sequences.

The operator acts on sequences indexed by the naturals, cut into
consecutive blocks ``[b_n, b_n+1)``.  Inside a block it is a forward
shift weighted by powers of two; at the last coordinate of block ``n``
it sends mass back to the start of an earlier block ``phi(n)``, scaled
by a tiny power of two ``v_n``, and subtracts the inverse of the block's
weight product times the block-start vector.  Every datum derives from
an integer schedule, so all arithmetic stays in powers of two and every
orbit of a basis vector is exactly representable.

The schedule itself is built in two layers.  A pairing map assigns to
each band index ``k`` a pair ``(psi1(k), psi2(k))``; ``psi1`` controls
how many blocks band ``k`` contains and ``psi2`` selects which scale of
the run/drop ladders the band uses.  On top of the map, the ladders
``delta`` (run scale), ``tau`` (drop scale), and ``Delta`` (block
length) are grown by induction, either structurally minimal so that
orbit experiments stay desk-scale, or in asymptotic mode where four
growth conditions needed by the non-frequency argument are additionally
enforced in exponent space.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from numbers import Rational
from typing import Iterable, Mapping

from gmpy2 import mpq

from .errors import (
    ConfigError,
    MapInfeasible,
    SupportOutOfRange,
    ValidationError,
)
from .exactnum import DyadicScalar, ExactScalar, exact

__all__ = [
    "PsiMap",
    "build_psi",
    "Schedule",
    "build_schedule",
    "CTypeParams",
    "realize_params",
    "SparseVec",
    "apply",
    "apply_power",
    "orbit_rows",
    "project_block",
    "block_functional",
]


# ---------------------------------------------------------------------------
# pairing map


@dataclass(frozen=True)
class PsiMap:
    """Band pairing: ``k -> (psi1(k), psi2(k))`` for ``1 <= k <= horizon``.

    The defining constraints: ``1 <= psi1(k) < min(k+1, psi2(k))`` and
    ``psi2(k)`` exceeds every ``psi2(j)`` with ``j < psi1(k)``.  The
    second constraint looks back at the indices below ``psi1(k)``, so
    freezing a short prefix of the table pins the thresholds that all
    later assignments must clear.

    ``promises`` records, per first coordinate ``i``, the least second
    coordinate ``j_i`` from which every fiber ``{k : pair(k) = (i, j)}``
    is guaranteed the configured multiplicity within the horizon.
    """

    table: tuple[tuple[int, int], ...]
    promises: dict[int, int]
    i_max: int
    j_max: int
    multiplicity: int

    @property
    def horizon(self) -> int:
        return len(self.table)

    def pair(self, k: int) -> tuple[int, int]:
        if not (1 <= k <= self.horizon):
            raise ConfigError(f"band index {k} outside the map horizon {self.horizon}")
        return self.table[k - 1]

    def psi1(self, k: int) -> int:
        return self.pair(k)[0]

    def psi2(self, k: int) -> int:
        return self.pair(k)[1]

    def fiber(self, i: int, j: int) -> tuple[int, ...]:
        return tuple(k for k, p in enumerate(self.table, start=1) if p == (i, j))

    def validate(self) -> None:
        for k, (i, j) in enumerate(self.table, start=1):
            if not (1 <= i < min(k + 1, j)):
                raise ValidationError(f"pair ({i}, {j}) illegal at band {k}")
            back = [self.table[m - 1][1] for m in range(1, i)]
            if back and j <= max(back):
                raise ValidationError(
                    f"band {k}: second coordinate {j} does not clear the "
                    f"threshold {max(back)} set by earlier bands"
                )
        for i, j_start in self.promises.items():
            for j in range(j_start, self.j_max + 1):
                count = len(self.fiber(i, j))
                if count < self.multiplicity:
                    raise ValidationError(
                        f"fiber ({i}, {j}) occurs {count} < {self.multiplicity} times"
                    )

    def max_psi2(self, up_to: int) -> int:
        return max(p[1] for p in self.table[:up_to])

    def to_json_dict(self) -> dict:
        return {
            "table": [list(p) for p in self.table],
            "promises": {str(i): j for i, j in sorted(self.promises.items())},
            "i_max": self.i_max,
            "j_max": self.j_max,
            "multiplicity": self.multiplicity,
        }


def build_psi(i_max: int, j_max: int, multiplicity: int, horizon: int) -> PsiMap:
    """Deterministic pairing map with every promised fiber hit enough.

    Construction: a frozen prefix of ``(1, 2)`` pairs long enough that
    the look-back threshold is 2 for every first coordinate in range,
    then a round-robin over the target pairs in diagonal order (second
    coordinate first), cycled until the horizon is filled.
    """
    if i_max < 1 or j_max < 2 or multiplicity < 1 or horizon < 1:
        raise ConfigError("need i_max >= 1, j_max >= 2, multiplicity >= 1, horizon >= 1")
    promises = {i: 2 if i == 1 else max(i + 1, 3) for i in range(1, i_max + 1)}
    if any(j_start > j_max for j_start in promises.values()):
        raise MapInfeasible(
            f"j_max = {j_max} leaves some first coordinate without any legal pair"
        )
    prefix = i_max - 1
    targets = sorted(
        ((i, j) for i in range(1, i_max + 1) for j in range(promises[i], j_max + 1)),
        key=lambda p: (p[1], p[0]),
    )
    needed = prefix + multiplicity * len(targets)
    if horizon < needed:
        raise MapInfeasible(f"horizon {horizon} < {needed} needed for the requested fibers")
    table: list[tuple[int, int]] = [(1, 2)] * prefix
    cursor = 0
    while len(table) < horizon:
        table.append(targets[cursor % len(targets)])
        cursor += 1
    built = PsiMap(tuple(table), promises, i_max, j_max, multiplicity)
    built.validate()
    return built


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class Schedule:
    """Integer ladders driving every operator parameter.

    ``delta`` and ``tau`` are indexed 0..levels (seed at 0) and strictly
    increase; ``Delta[k]`` is the common length of band ``k``'s blocks,
    with ``Delta[0]`` the seed block length; ``n_values[k]`` is the
    first block index of band ``k``.  ``gamma_exponent(k)`` is the
    exponent of the band's leak factor
    ``2^(k * delta[k-1] + 2 n_k + 1 - tau[k])``; driving it far negative
    is what the asymptotic mode is for.
    """

    psi: PsiMap
    mode: str
    n: tuple[int, ...]
    delta: tuple[int, ...]
    tau: tuple[int, ...]
    Delta: tuple[int, ...]

    @property
    def k_max(self) -> int:
        return len(self.Delta) - 1

    @property
    def levels(self) -> int:
        return len(self.delta) - 1

    def band_start(self, k: int) -> int:
        return self.n[k]

    def gamma_exponent(self, k: int) -> int:
        if not (1 <= k <= self.levels):
            raise ConfigError(f"no leak exponent at level {k}")
        return k * self.delta[k - 1] + 2 * self.n[k] + 1 - self.tau[k]

    @property
    def gamma_exponents(self) -> dict[int, int]:
        return {k: self.gamma_exponent(k) for k in range(1, self.levels + 1)}

    def validate(self) -> None:
        if self.delta[0] < 1 or self.tau[0] < 1 or self.Delta[0] < 2:
            raise ValidationError("seeds must be positive (seed block length at least 2)")
        for name, ladder in (("delta", self.delta), ("tau", self.tau)):
            for k, (a, b) in enumerate(zip(ladder, ladder[1:]), start=1):
                if b <= a:
                    raise ValidationError(f"{name} fails to increase at level {k}")
        if self.n[0] != 0 or self.n[1] != 1:
            raise ValidationError("band starts must begin 0, 1")
        for k in range(1, len(self.n) - 1):
            if self.n[k + 1] - self.n[k] != self.psi.psi1(k):
                raise ValidationError(f"band width at {k} disagrees with the pairing map")
        for k in range(1, self.k_max + 1):
            level = self.psi.psi2(k)
            if level > self.levels:
                raise ValidationError(f"band {k} needs ladder level {level}")
            if self.Delta[k] % (2 * self.Delta[k - 1]) != 0:
                raise ValidationError(f"block length at band {k} not a multiple of twice the previous")
            if self.Delta[k] <= (k + 3) * self.delta[level] + 4 * self.n[k + 1] + 2:
                raise ValidationError(f"block length at band {k} too small for its weight bands")

    def final_conditions(self, k: int) -> dict[str, bool]:
        """The four growth conditions, checked in integer space."""
        E = self.gamma_exponent
        leak_ok = E(k) <= -16 * k
        if k >= 2:
            leak_ok = leak_ok and E(k) <= 2 * min(E(s) for s in range(1, k))
        sep_ok = self.delta[k] - self.tau[k] >= k
        growth_ok = k * (k - 1) * self.delta[k - 1] <= self.delta[k]
        length_ok = True
        if k <= self.k_max:
            level = self.psi.psi2(k)
            length_ok = k * (k * self.delta[level] + self.n[k + 1]) <= self.Delta[k]
        return {
            "leak": leak_ok,
            "separation": sep_ok,
            "run_growth": growth_ok,
            "length_growth": length_ok,
        }

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "band_starts": list(self.n),
            "delta": list(self.delta),
            "tau": list(self.tau),
            "Delta": list(self.Delta),
            "gamma_exponents": {str(k): e for k, e in self.gamma_exponents.items()},
            "psi": self.psi.to_json_dict(),
        }


def build_schedule(
    mode: str,
    psi: PsiMap,
    k_max: int,
    seeds: tuple[int, int, int] = (1, 1, 2),
    delta_slack: int = 1,
) -> Schedule:
    """Grow the ladders by induction up to band ``k_max``.

    Structural mode takes the smallest values meeting the structural
    constraints, except that the run/drop separation ``delta - tau >= k``
    is kept as well, since every dynamics experiment downstream relies
    on it.  Asymptotic mode instead picks, in order: the drop scale
    making the leak exponent clear both its ceilings, the run scale
    respecting the super-linear growth condition, then the block length
    clearing its two floors.  ``delta_slack`` scales the structural
    block-length threshold; larger values spread the blocks out, which
    some counting experiments need.

    Ladder levels run to the largest scale any realized band refers to,
    so the pairing map must cover that far.
    """
    if mode not in ("structural", "asymptotic"):
        raise ConfigError(f"unknown schedule mode {mode!r}")
    if k_max < 1:
        raise ConfigError("need k_max >= 1")
    if delta_slack < 1:
        raise ConfigError("delta_slack must be at least 1")
    delta0, tau0, Delta0 = (int(s) for s in seeds)
    if delta0 < 1 or tau0 < 1 or Delta0 < 2:
        raise ConfigError("seeds must be positive, with seed block length at least 2")
    if psi.horizon < k_max:
        raise ConfigError(f"pairing map horizon {psi.horizon} < k_max {k_max}")
    levels = max(k_max, psi.max_psi2(k_max))
    if psi.horizon < levels:
        raise ConfigError(
            f"pairing map horizon {psi.horizon} < ladder level {levels}; "
            "rebuild the map with a larger horizon"
        )

    n_values = [0, 1]
    for k in range(1, levels + 1):
        n_values.append(n_values[k] + psi.psi1(k))

    delta = [delta0]
    tau = [tau0]
    leak_min = None
    for k in range(1, levels + 1):
        base = k * delta[k - 1] + 2 * n_values[k] + 1
        if mode == "asymptotic":
            margin = 16 * k
            if leak_min is not None:
                margin = max(margin, -2 * leak_min)
            tau_k = max(tau[k - 1] + 1, base + margin)
        else:
            tau_k = tau[k - 1] + 1
        tau.append(tau_k)
        leak = base - tau_k
        leak_min = leak if leak_min is None else min(leak_min, leak)
        if mode == "asymptotic":
            delta_k = max(delta[k - 1] + 1, tau_k + k, k * (k - 1) * delta[k - 1])
        else:
            delta_k = max(delta[k - 1] + 1, tau_k + k)
        delta.append(delta_k)

    Delta = [Delta0]
    for k in range(1, k_max + 1):
        level = psi.psi2(k)
        threshold = delta_slack * ((k + 3) * delta[level] + 4 * n_values[k + 1] + 2)
        step = 2 * Delta[k - 1]
        value = step * (threshold // step + 1)
        if mode == "asymptotic":
            floor2 = k * (k * delta[level] + n_values[k + 1])
            if value < floor2:
                value = step * (-(-floor2 // step))
        Delta.append(value)

    built = Schedule(psi, mode, tuple(n_values[: levels + 2]), tuple(delta), tuple(tau), tuple(Delta))
    built.validate()
    return built


def schedule_from_tables(
    psi: PsiMap,
    delta: Iterable[int],
    tau: Iterable[int],
    Delta: Iterable[int],
) -> Schedule:
    """Wrap explicit ladders (validated) for hand-built experiments."""
    delta = tuple(int(v) for v in delta)
    tau = tuple(int(v) for v in tau)
    Delta = tuple(int(v) for v in Delta)
    levels = len(delta) - 1
    if len(tau) != levels + 1:
        raise ConfigError("delta and tau ladders must share their length")
    n_values = [0, 1]
    for k in range(1, levels + 1):
        n_values.append(n_values[k] + psi.psi1(k))
    built = Schedule(psi, "manual", tuple(n_values), delta, tau, Delta)
    built.validate()
    return built


# ---------------------------------------------------------------------------
# realized parameters


@dataclass(frozen=True)
class CTypeParams:
    """Materialized operator data for block indices ``0..n_max``.

    Per block: its band, feedback target, feedback exponent (the power
    of two scaling the feedback), and the four case boundaries of the
    in-block weight rule as offsets ``(A, B, C, D)`` with weights
    2 on [1, A], 1 on (A, B), 1/2 on [B, C), 2 on [C, D), 1 on [D, len).
    Block 0 carries weight 1 throughout and boundary None.
    """

    schedule: Schedule
    n_max: int
    b: tuple[int, ...]
    band: tuple[int, ...]
    phi: tuple[int, ...]
    feedback_exp: tuple[int | None, ...]
    boundaries: tuple[tuple[int, int, int, int] | None, ...]

    def block_of(self, index: int) -> int:
        if index < 0 or index >= self.b[-1]:
            raise SupportOutOfRange(f"index {index} outside the realized horizon {self.b[-1]}")
        return bisect_right(self.b, index) - 1

    def block_length(self, n: int) -> int:
        return self.b[n + 1] - self.b[n]

    def weight_exponent(self, n: int, offset: int) -> int:
        """Exponent of the weight at in-block offset ``1 <= offset < len``."""
        length = self.block_length(n)
        if not (1 <= offset < length):
            raise ConfigError(f"offset {offset} outside block {n} of length {length}")
        bounds = self.boundaries[n]
        if bounds is None:
            return 0
        a, b, c, d = bounds
        if offset <= a:
            return 1
        if offset < b:
            return 0
        if offset < c:
            return -1
        if offset < d:
            return 1
        return 0

    def log2prod(self, n: int, lo: int, hi: int) -> int:
        """Exponent of the product of weights at offsets ``[lo, hi)``.

        Offsets clip to the weight range ``[1, block length)``; an empty
        range gives the empty product, exponent 0.
        """
        length = self.block_length(n)
        lo = max(lo, 1)
        hi = min(hi, length)
        if hi <= lo:
            return 0
        bounds = self.boundaries[n]
        if bounds is None:
            return 0
        a, b, c, d = bounds

        def overlap(left: int, right: int) -> int:
            return max(0, min(hi, right) - max(lo, left))

        return overlap(1, a + 1) - overlap(b, c) + overlap(c, d)

    def product_exponent(self, n: int) -> int:
        return self.log2prod(n, 1, self.block_length(n))

    def validate(self) -> None:
        sched = self.schedule
        if self.b[0] != 0:
            raise ValidationError("blocks must start at 0")
        for n in range(self.n_max + 1):
            if self.b[n + 1] <= self.b[n]:
                raise ValidationError(f"block {n} has nonpositive length")
        if self.phi[0] != 0 or self.band[0] != 0:
            raise ValidationError("block 0 must be the seed block")
        if self.feedback_exp[0] is not None or self.boundaries[0] is not None:
            raise ValidationError("block 0 carries no feedback and flat weights")
        for n in range(1, self.n_max + 1):
            k = self.band[n]
            if not (sched.band_start(k) <= n < sched.band_start(k + 1)):
                raise ValidationError(f"block {n} assigned to the wrong band {k}")
            if self.phi[n] != n - sched.band_start(k):
                raise ValidationError(f"feedback target of block {n} is off")
            if not (0 <= self.phi[n] < n):
                raise ValidationError(f"feedback target of block {n} not earlier than it")
            level = sched.psi.psi2(k)
            if self.feedback_exp[n] != -sched.tau[level]:
                raise ValidationError(f"feedback exponent of block {n} is off")
            length = self.block_length(n)
            if length != sched.Delta[k]:
                raise ValidationError(f"block {n} length differs from its band's")
            period = 2 * self.block_length(self.phi[n])
            if length % period != 0:
                raise ValidationError(
                    f"block {n} length not a multiple of twice its target's length"
                )
            d = sched.delta[level]
            expect = (k * d + 2 * n + 1, length - 3 * d - 2 * n - 1, length - 2 * d, length - d)
            if self.boundaries[n] != expect:
                raise ValidationError(f"weight boundaries of block {n} are off")
            a, b, c, dd = expect
            if not (1 <= a < b <= c < dd < length):
                raise ValidationError(f"weight cases of block {n} do not tile")
            if self.product_exponent(n) != k * d:
                raise ValidationError(f"weight product identity fails at block {n}")
        if self.product_exponent(0) != 0:
            raise ValidationError("seed block weight product must be trivial")
        # The action's two cases (forward shift, last coordinate) must cover
        # each block exactly once; with half-open blocks this is the claim
        # that every block has a last coordinate distinct from the next
        # block's first.
        for n in range(self.n_max + 1):
            shift_count = (self.b[n + 1] - 1) - self.b[n]
            if shift_count + 1 != self.block_length(n) or self.b[n + 1] - 1 >= self.b[n + 1]:
                raise ValidationError(f"action cases fail to partition block {n}")

    def boundedness_certificate(self) -> int:
        """Least weight-product exponent over realized blocks; nonnegative
        means the products stay at or above 1."""
        return min(self.product_exponent(n) for n in range(self.n_max + 1))

    def phi_preimage_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for n in range(1, self.n_max + 1):
            counts[self.phi[n]] = counts.get(self.phi[n], 0) + 1
        return counts

    def to_json_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "block_edges": list(self.b),
            "bands": list(self.band),
            "feedback_targets": list(self.phi),
            "feedback_exponents": [e for e in self.feedback_exp],
            "product_exponents": [self.product_exponent(n) for n in range(self.n_max + 1)],
        }


def realize_params(schedule: Schedule, n_max: int) -> CTypeParams:
    if n_max < 0:
        raise ConfigError("need n_max >= 0")
    if n_max >= schedule.n[schedule.k_max + 1]:
        raise ConfigError(
            f"schedule bands cover blocks below {schedule.n[schedule.k_max + 1]}, "
            f"cannot realize block {n_max}"
        )
    b = [0]
    band = [0]
    phi = [0]
    feedback: list[int | None] = [None]
    boundaries: list[tuple[int, int, int, int] | None] = [None]
    for n in range(0, n_max + 1):
        if n == 0:
            b.append(b[-1] + schedule.Delta[0])
            continue
        k = bisect_right(schedule.n, n) - 1
        band.append(k)
        phi.append(n - schedule.band_start(k))
        level = schedule.psi.psi2(k)
        feedback.append(-schedule.tau[level])
        length = schedule.Delta[k]
        d = schedule.delta[level]
        boundaries.append(
            (k * d + 2 * n + 1, length - 3 * d - 2 * n - 1, length - 2 * d, length - d)
        )
        b.append(b[-1] + length)
    params = CTypeParams(
        schedule,
        n_max,
        tuple(b),
        tuple(band),
        tuple(phi),
        tuple(feedback),
        tuple(boundaries),
    )
    params.validate()
    return params


# ---------------------------------------------------------------------------
# vectors


def _check_scalar(value):
    if isinstance(value, float):
        raise ConfigError("refusing float coefficients; give exact values")
    if isinstance(value, DyadicScalar):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Rational) or type(value) is type(mpq(1)):
        return exact(value)
    raise ConfigError(f"unsupported coefficient type {type(value).__name__}")


class SparseVec:
    """Finitely supported vector with exact coefficients, no stored zeros."""

    __slots__ = ("entries",)

    def __init__(self, entries: Mapping[int, object] | None = None):
        clean: dict[int, object] = {}
        if entries:
            for index, value in entries.items():
                index = int(index)
                if index < 0:
                    raise ConfigError("indices must be nonnegative")
                value = _check_scalar(value)
                if not (value == 0):
                    clean[index] = value
        self.entries = clean

    @classmethod
    def basis(cls, index: int, coefficient=None) -> "SparseVec":
        if coefficient is None:
            coefficient = DyadicScalar.one()
        return cls({index: coefficient})

    @classmethod
    def _trusted(cls, entries: dict) -> "SparseVec":
        # Internal: entries already hold checked scalars; only drop zeros.
        vec = cls.__new__(cls)
        vec.entries = {i: c for i, c in entries.items() if not (c == 0)}
        return vec

    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.entries))

    def coefficient(self, index: int):
        return self.entries.get(index, 0)

    def is_zero(self) -> bool:
        return not self.entries

    def norm(self) -> ExactScalar:
        """Sum of absolute coefficients, exact."""
        total = 0
        for value in self.entries.values():
            total = abs(value) + total
        return total

    def scale(self, factor) -> "SparseVec":
        factor = _check_scalar(factor)
        return SparseVec({i: factor * v for i, v in self.entries.items()})

    def __add__(self, other: "SparseVec") -> "SparseVec":
        merged = dict(self.entries)
        for index, value in other.entries.items():
            merged[index] = merged[index] + value if index in merged else value
        return SparseVec(merged)

    def __sub__(self, other: "SparseVec") -> "SparseVec":
        return self + other.scale(-1)

    def __neg__(self) -> "SparseVec":
        return self.scale(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVec):
            return NotImplemented
        if set(self.entries) != set(other.entries):
            return False
        return all(value == other.entries[index] for index, value in self.entries.items())

    __hash__ = None

    def __repr__(self):
        if len(self.entries) > 4:
            return f"SparseVec({len(self.entries)} entries)"
        inside = ", ".join(f"{i}: {v}" for i, v in sorted(self.entries.items()))
        return f"SparseVec({{{inside}}})"


def _scale_pow2(value, exponent: int):
    if isinstance(value, DyadicScalar):
        return value.mul_pow2(exponent)
    if exponent >= 0:
        return value * 2**exponent
    return value * mpq(1, 2**-exponent)


# ---------------------------------------------------------------------------
# operator action


def apply(params: CTypeParams, x: SparseVec) -> SparseVec:
    """One application of the operator, exact.

    Inside a block the forward shift applies the next offset's weight;
    the last coordinate of block ``n >= 1`` feeds back to the start of
    block ``phi(n)`` scaled by the feedback power of two and subtracts
    the product-inverse times the block-start vector; the seed block's
    last coordinate maps to the negated origin.
    """
    out: dict[int, object] = {}
    edges = params.b
    horizon = edges[-1]
    for j, coeff in x.entries.items():
        if j >= horizon:
            raise SupportOutOfRange(f"index {j} beyond realized blocks (< {horizon})")
        n = bisect_right(edges, j) - 1
        if j < edges[n + 1] - 1:
            value = _scale_pow2(coeff, params.weight_exponent(n, j + 1 - edges[n]))
            target = j + 1
            out[target] = out[target] + value if target in out else value
        elif n == 0:
            out[0] = out[0] - coeff if 0 in out else -coeff
        else:
            back = edges[params.phi[n]]
            value = _scale_pow2(coeff, params.feedback_exp[n])
            out[back] = out[back] + value if back in out else value
            start = edges[n]
            value = _scale_pow2(-coeff, -params.product_exponent(n))
            out[start] = out[start] + value if start in out else value
    return SparseVec._trusted(out)


def apply_power(params: CTypeParams, x: SparseVec, m: int) -> SparseVec:
    if m < 0:
        raise ConfigError("powers must be nonnegative")
    for _ in range(m):
        x = apply(params, x)
    return x


def orbit_rows(params: CTypeParams, index: int, steps: int) -> list[tuple[int, int, int, int]]:
    """Orbit of the basis vector at ``index`` as flat CSV-ready rows.

    One row ``(step, index, mantissa, exponent)`` per nonzero coefficient,
    steps 0..steps inclusive, indices ascending within a step.  Basis
    orbits stay dyadic, so the mantissa/exponent split is always exact.
    """
    if steps < 0:
        raise ConfigError("steps must be nonnegative")
    rows = []
    x = SparseVec.basis(index)
    for step in range(steps + 1):
        for i in x.support():
            value = x.entries[i]
            if not isinstance(value, DyadicScalar):
                value = DyadicScalar.from_rational(value)
            rows.append((step, i, value.mantissa, value.exponent))
        if step < steps:
            x = apply(params, x)
    return rows


def project_block(x: SparseVec, l: int, params: CTypeParams) -> SparseVec:
    """Restriction of the vector to the coordinates of block ``l``."""
    lo, hi = params.b[l], params.b[l + 1]
    return SparseVec({i: v for i, v in x.entries.items() if lo <= i < hi})


def block_functional(x: SparseVec, l: int, params: CTypeParams) -> ExactScalar:
    """Block mass with each coordinate carried to the block's end.

    Each coefficient in block ``l`` is weighted by the product of the
    remaining in-block weights ahead of it; the functional is the sum of
    the absolute weighted coefficients.  It measures how much mass the
    block can emit when its content reaches the feedback coordinate.
    """
    lo, hi = params.b[l], params.b[l + 1]
    length = hi - lo
    total = 0
    for index, value in x.entries.items():
        if lo <= index < hi:
            exponent = params.log2prod(l, index - lo + 1, length)
            total = abs(_scale_pow2(value, exponent)) + total
    return total
