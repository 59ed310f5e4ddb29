"""Weighted natural densities, computed exactly over finite prefixes.

An index set ``I`` and a positive weight sequence ``a`` determine, for
every horizon ``N >= 1``, the prefix quotient

    Q_a(I, N) = (sum of a_n over n in I with n < N) / (sum of a_n, n < N).

True upper and lower weighted densities are limsup/liminf of ``Q_a(I, N)``
over all ``N`` and are out of computational reach; reports therefore take
the max and min of the quotient over a tail window of a finite checkpoint
grid.  The grid is geometrically spaced (ratio 5/4 by default) and is
augmented with the structural boundary points of block-built sets, since
that is exactly where their quotient extrema sit.

Prefixes are half open everywhere in this package: a horizon ``N`` means
indices ``0 <= n < N``.  All quotients are exact rationals; floats appear
only in display columns written at output time.

A weight sequence is called *admissible* here when it is positive,
non-increasing, tends to zero, and has divergent partial sums.  Several
constructions require admissible weights and consume the certificate
reported by :meth:`WeightSeq.admissibility`.
"""

from __future__ import annotations

import csv
import io
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from gmpy2 import mpq

from .errors import ConfigError
from .exactnum import ExactScalar, exact, format_exact, parse_exact

__all__ = [
    "IndexSet",
    "ExplicitSet",
    "PeriodicSet",
    "BlockSet",
    "GeometricBlockSet",
    "ComplementSet",
    "ShiftedSet",
    "evens",
    "odds",
    "naturals",
    "empty_set",
    "index_set_from_description",
    "WeightSeq",
    "UnitWeight",
    "HarmonicWeight",
    "BlockConstantWeight",
    "TableWeight",
    "weight_from_description",
    "Admissibility",
    "density_quotient",
    "DensityReport",
    "estimate_densities",
    "DualityResult",
    "duality_check",
    "MonotonicityReport",
    "monotonicity_check",
    "DropReport",
    "ratio_drop_indices",
    "ShiftGapResult",
    "shift_quotient_gap",
    "DEFAULT_CHECKPOINT_RATIO",
    "DEFAULT_TAIL_FRACTION",
]

DEFAULT_CHECKPOINT_RATIO = mpq(5, 4)
DEFAULT_TAIL_FRACTION = mpq(1, 4)


# ---------------------------------------------------------------------------
# index sets


class IndexSet:
    """A set of natural numbers with exact membership and prefix counting."""

    def member(self, n: int) -> bool:
        raise NotImplementedError

    def prefix_count(self, n: int) -> int:
        """Number of members in ``[0, n)``."""
        raise NotImplementedError

    def elements_up_to(self, n: int) -> Iterator[int]:
        """Ascending members below ``n``."""
        raise NotImplementedError

    def count_range(self, lo: int, hi: int) -> int:
        if hi <= lo:
            return 0
        return self.prefix_count(hi) - self.prefix_count(lo)

    def checkpoint_hints(self, horizon: int) -> tuple[int, ...]:
        """Horizon values worth probing because extrema can sit there."""
        return ()

    def complement(self) -> "IndexSet":
        return ComplementSet(self)

    def shift(self, offset: int = 1) -> "IndexSet":
        if offset < 0:
            raise ConfigError("shift offset must be nonnegative")
        if offset == 0:
            return self
        return ShiftedSet(self, offset)

    def describe(self) -> dict:
        raise NotImplementedError


class ExplicitSet(IndexSet):
    """A finite set given by its sorted elements."""

    def __init__(self, elements: Iterable[int]):
        els = sorted(set(int(e) for e in elements))
        if els and els[0] < 0:
            raise ConfigError("index sets live on the naturals")
        self.elements = tuple(els)

    def member(self, n: int) -> bool:
        i = bisect_left(self.elements, n)
        return i < len(self.elements) and self.elements[i] == n

    def prefix_count(self, n: int) -> int:
        return bisect_left(self.elements, n)

    def elements_up_to(self, n: int) -> Iterator[int]:
        return iter(self.elements[: self.prefix_count(n)])

    def shift(self, offset: int = 1) -> IndexSet:
        if offset < 0:
            raise ConfigError("shift offset must be nonnegative")
        return ExplicitSet(e + offset for e in self.elements)

    def describe(self) -> dict:
        return {"type": "explicit", "elements": list(self.elements)}

    def __repr__(self):
        return f"ExplicitSet({len(self.elements)} elements)"


class PeriodicSet(IndexSet):
    """All ``n`` with ``n mod modulus`` in a fixed residue set."""

    def __init__(self, residues: Iterable[int], modulus: int):
        modulus = int(modulus)
        if modulus < 1:
            raise ConfigError("modulus must be at least 1")
        res = sorted(set(int(r) for r in residues))
        if res and not (0 <= res[0] and res[-1] < modulus):
            raise ConfigError("residues must lie in [0, modulus)")
        self.residues = tuple(res)
        self.modulus = modulus
        self._res_set = frozenset(res)

    def member(self, n: int) -> bool:
        return n % self.modulus in self._res_set

    def prefix_count(self, n: int) -> int:
        if n <= 0:
            return 0
        full, rem = divmod(n, self.modulus)
        return full * len(self.residues) + bisect_left(self.residues, rem)

    def elements_up_to(self, n: int) -> Iterator[int]:
        for base in range(0, max(n, 0), self.modulus):
            for r in self.residues:
                v = base + r
                if v >= n:
                    return
                yield v

    def describe(self) -> dict:
        return {"type": "periodic", "residues": list(self.residues), "modulus": self.modulus}

    def __repr__(self):
        return f"PeriodicSet({self.residues}, mod {self.modulus})"


def evens() -> PeriodicSet:
    return PeriodicSet((0,), 2)


def odds() -> PeriodicSet:
    return PeriodicSet((1,), 2)


def naturals() -> PeriodicSet:
    return PeriodicSet((0,), 1)


def empty_set() -> ExplicitSet:
    return ExplicitSet(())


class BlockSet(IndexSet):
    """A union of disjoint half-open blocks ``[start, end)``.

    Blocks may be given explicitly or through a rule ``k -> (start, end)``;
    rule-backed sets materialize blocks lazily.  Blocks must be strictly
    ordered: each start is at least the previous end.
    """

    def __init__(
        self,
        blocks: Iterable[tuple[int, int]] | None = None,
        rule: Callable[[int], tuple[int, int] | None] | None = None,
    ):
        if (blocks is None) == (rule is None):
            raise ConfigError("give either explicit blocks or a rule")
        self._rule = rule
        self._starts: list[int] = []
        self._ends: list[int] = []
        self._done = rule is None
        if blocks is not None:
            for start, end in blocks:
                self._push(int(start), int(end))

    def _push(self, start: int, end: int) -> None:
        if start < 0 or end <= start:
            raise ConfigError(f"bad block [{start}, {end})")
        if self._ends and start < self._ends[-1]:
            raise ConfigError("blocks must be disjoint and ascending")
        self._starts.append(start)
        self._ends.append(end)

    def _cover(self, n: int) -> None:
        # materialize rule blocks until one starts beyond n
        while not self._done and (not self._starts or self._starts[-1] <= n):
            nxt = self._rule(len(self._starts))
            if nxt is None:
                self._done = True
                return
            self._push(int(nxt[0]), int(nxt[1]))

    def member(self, n: int) -> bool:
        self._cover(n)
        i = bisect_right(self._starts, n) - 1
        return i >= 0 and n < self._ends[i]

    def prefix_count(self, n: int) -> int:
        self._cover(n)
        total = 0
        for start, end in zip(self._starts, self._ends):
            if start >= n:
                break
            total += min(end, n) - start
        return total

    def elements_up_to(self, n: int) -> Iterator[int]:
        self._cover(n)
        for start, end in zip(self._starts, self._ends):
            if start >= n:
                return
            yield from range(start, min(end, n))

    def blocks_within(self, horizon: int) -> list[tuple[int, int]]:
        self._cover(horizon)
        return [(s, e) for s, e in zip(self._starts, self._ends) if s < horizon]

    def checkpoint_hints(self, horizon: int) -> tuple[int, ...]:
        # block starts and ends are where counting quotients peak and dip;
        # a block starting exactly at the horizon still marks a dip there
        self._cover(horizon)
        hints = []
        for start, end in zip(self._starts, self._ends):
            if start > horizon:
                break
            for value in (start, end):
                if 1 <= value <= horizon:
                    hints.append(value)
        return tuple(hints)

    def describe(self) -> dict:
        if not self._done:
            raise ConfigError("rule-backed block sets need a concrete description; "
                              "use a named family such as GeometricBlockSet")
        return {"type": "blocks", "blocks": [[s, e] for s, e in zip(self._starts, self._ends)]}

    def __repr__(self):
        return f"BlockSet({len(self._starts)} blocks materialized)"


class GeometricBlockSet(BlockSet):
    """The union of blocks ``[base**k, mult * base**k)`` over ``k >= 0``."""

    def __init__(self, base: int = 4, mult: int = 2):
        base, mult = int(base), int(mult)
        if base < 2 or not (1 < mult <= base):
            raise ConfigError("need base >= 2 and 1 < mult <= base")
        self.base = base
        self.mult = mult
        super().__init__(rule=lambda k: (base**k, mult * base**k))

    def describe(self) -> dict:
        return {"type": "geometric_blocks", "base": self.base, "mult": self.mult}

    def __repr__(self):
        return f"GeometricBlockSet(base={self.base}, mult={self.mult})"


class ComplementSet(IndexSet):
    """The naturals not in an inner set."""

    def __init__(self, inner: IndexSet):
        self.inner = inner

    def member(self, n: int) -> bool:
        return not self.inner.member(n)

    def prefix_count(self, n: int) -> int:
        return max(n, 0) - self.inner.prefix_count(n)

    def elements_up_to(self, n: int) -> Iterator[int]:
        cursor = 0
        for e in self.inner.elements_up_to(n):
            yield from range(cursor, e)
            cursor = e + 1
        yield from range(cursor, max(n, cursor))

    def complement(self) -> IndexSet:
        return self.inner

    def checkpoint_hints(self, horizon: int) -> tuple[int, ...]:
        return self.inner.checkpoint_hints(horizon)

    def describe(self) -> dict:
        return {"type": "complement", "inner": self.inner.describe()}

    def __repr__(self):
        return f"ComplementSet({self.inner!r})"


class ShiftedSet(IndexSet):
    """The inner set translated right by a fixed offset."""

    def __init__(self, inner: IndexSet, offset: int):
        offset = int(offset)
        if offset < 0:
            raise ConfigError("shift offset must be nonnegative")
        self.inner = inner
        self.offset = offset

    def member(self, n: int) -> bool:
        return n >= self.offset and self.inner.member(n - self.offset)

    def prefix_count(self, n: int) -> int:
        return self.inner.prefix_count(n - self.offset) if n > self.offset else 0

    def elements_up_to(self, n: int) -> Iterator[int]:
        return (e + self.offset for e in self.inner.elements_up_to(n - self.offset))

    def checkpoint_hints(self, horizon: int) -> tuple[int, ...]:
        return tuple(
            h + self.offset for h in self.inner.checkpoint_hints(horizon) if h + self.offset <= horizon
        )

    def describe(self) -> dict:
        return {"type": "shifted", "offset": self.offset, "inner": self.inner.describe()}

    def __repr__(self):
        return f"ShiftedSet({self.inner!r}, +{self.offset})"


def index_set_from_description(desc: dict) -> IndexSet:
    if not isinstance(desc, dict) or "type" not in desc:
        raise ConfigError(f"bad index set description: {desc!r}")
    kind = desc["type"]
    try:
        if kind == "explicit":
            return ExplicitSet(desc["elements"])
        if kind == "periodic":
            return PeriodicSet(desc["residues"], desc["modulus"])
        if kind == "blocks":
            return BlockSet(blocks=[(b[0], b[1]) for b in desc["blocks"]])
        if kind == "geometric_blocks":
            return GeometricBlockSet(desc["base"], desc["mult"])
        if kind == "complement":
            return ComplementSet(index_set_from_description(desc["inner"]))
        if kind == "shifted":
            return ShiftedSet(index_set_from_description(desc["inner"]), desc["offset"])
    except KeyError as missing:
        raise ConfigError(f"index set description missing key {missing}") from None
    raise ConfigError(f"unknown index set type {kind!r}")


# ---------------------------------------------------------------------------
# exact sum engines

_LEAF = 64


def _recip_range_sum(lo: int, hi: int) -> ExactScalar:
    """Sum of 1/t for lo <= t < hi, by divide and conquer."""
    if hi <= lo:
        return mpq(0)
    if hi - lo <= _LEAF:
        num, den = 0, 1
        for t in range(lo, hi):
            num = num * t + den
            den *= t
        return mpq(num, den)
    mid = (lo + hi) // 2
    return _recip_range_sum(lo, mid) + _recip_range_sum(mid, hi)


def _recip_list_sum(terms: Sequence[int], lo: int = 0, hi: int | None = None) -> ExactScalar:
    """Sum of 1/terms[i] over lo <= i < hi."""
    if hi is None:
        hi = len(terms)
    if hi <= lo:
        return mpq(0)
    if hi - lo <= _LEAF:
        num, den = 0, 1
        for i in range(lo, hi):
            t = terms[i]
            num = num * t + den
            den *= t
        return mpq(num, den)
    mid = (lo + hi) // 2
    return _recip_list_sum(terms, lo, mid) + _recip_list_sum(terms, mid, hi)


def _value_list_sum(values: Sequence[ExactScalar], lo: int = 0, hi: int | None = None) -> ExactScalar:
    if hi is None:
        hi = len(values)
    if hi <= lo:
        return mpq(0)
    if hi - lo <= _LEAF:
        total = mpq(0)
        for i in range(lo, hi):
            total += values[i]
        return total
    mid = (lo + hi) // 2
    return _value_list_sum(values, lo, mid) + _value_list_sum(values, mid, hi)


# ---------------------------------------------------------------------------
# weight sequences


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    reason: str


class WeightSeq:
    """A positive weight sequence with exact prefix and set sums."""

    def value(self, n: int) -> ExactScalar:
        raise NotImplementedError

    def prefix_sum(self, n: int) -> ExactScalar:
        """Sum of values over ``[0, n)``."""
        raise NotImplementedError

    def set_sum(self, index_set: IndexSet, n: int) -> ExactScalar:
        """Sum of values over members of the set below ``n``."""
        terms = [self.value(e) for e in index_set.elements_up_to(n)]
        return _value_list_sum(terms)

    def prefix_sums(self, cuts: Sequence[int]) -> list[ExactScalar]:
        return [self.prefix_sum(n) for n in cuts]

    def set_sums(self, index_set: IndexSet, cuts: Sequence[int]) -> list[ExactScalar]:
        return [self.set_sum(index_set, n) for n in cuts]

    def admissibility(self) -> Admissibility:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class UnitWeight(WeightSeq):
    """Constant weight 1: quotients reduce to counting densities."""

    def value(self, n: int) -> ExactScalar:
        return mpq(1)

    def prefix_sum(self, n: int) -> ExactScalar:
        return mpq(max(n, 0))

    def set_sum(self, index_set: IndexSet, n: int) -> ExactScalar:
        return mpq(index_set.prefix_count(n))

    def admissibility(self) -> Admissibility:
        return Admissibility(False, "constant weight does not tend to zero")

    def describe(self) -> dict:
        return {"type": "unit"}

    def __repr__(self):
        return "UnitWeight()"


class HarmonicWeight(WeightSeq):
    """Weights 1/(n+1): admissible, with logarithmic partial sums."""

    def value(self, n: int) -> ExactScalar:
        return mpq(1, n + 1)

    def prefix_sum(self, n: int) -> ExactScalar:
        return _recip_range_sum(1, max(n, 0) + 1)

    def prefix_sums(self, cuts: Sequence[int]) -> list[ExactScalar]:
        out = []
        total = mpq(0)
        prev = 0
        for n in cuts:
            total += _recip_range_sum(prev + 1, max(n, 0) + 1)
            prev = max(n, prev)
            out.append(total)
        return out

    def set_sum(self, index_set: IndexSet, n: int) -> ExactScalar:
        terms = [e + 1 for e in index_set.elements_up_to(n)]
        return _recip_list_sum(terms)

    def set_sums(self, index_set: IndexSet, cuts: Sequence[int]) -> list[ExactScalar]:
        top = cuts[-1] if cuts else 0
        terms = [e + 1 for e in index_set.elements_up_to(top)]
        out = []
        total = mpq(0)
        prev = 0
        for n in cuts:
            upto = bisect_left(terms, n + 1)
            total += _recip_list_sum(terms, prev, upto)
            prev = max(upto, prev)
            out.append(total)
        return out

    def admissibility(self) -> Admissibility:
        return Admissibility(True, "positive, non-increasing, null, divergent")

    def describe(self) -> dict:
        return {"type": "harmonic"}

    def __repr__(self):
        return "HarmonicWeight()"


class BlockConstantWeight(WeightSeq):
    """Weight 1/L on each block of a breakpoint sequence, L the block length.

    Breakpoints ``0 = n_0 < n_1 < ... < n_B`` define blocks ``[n_k, n_{k+1})``
    of length ``L_k``; the weight is ``1/L_k`` there, so each stored block
    contributes exactly 1 to the prefix sum.  Past the last stored
    breakpoint the blocks continue canonically with lengths growing by one
    per block, which keeps the sequence total on the naturals and, when the
    stored lengths are non-decreasing, admissible.
    """

    def __init__(self, breakpoints: Iterable[int]):
        edges = [int(b) for b in breakpoints]
        if len(edges) < 2 or edges[0] != 0:
            raise ConfigError("breakpoints must start at 0 and contain at least one block")
        if any(b >= c for b, c in zip(edges, edges[1:])):
            raise ConfigError("breakpoints must be strictly increasing")
        self.breakpoints = tuple(edges)
        self._ext: list[int] = [edges[-1]]  # extension edges, starting at the last stored one

    def _ensure_edges(self, n: int) -> None:
        stored_last = self.breakpoints[-1]
        length = (self._ext[-1] - self._ext[-2]) if len(self._ext) >= 2 else (
            stored_last - self.breakpoints[-2]
        )
        while self._ext[-1] <= n:
            length += 1
            self._ext.append(self._ext[-1] + length)

    def _block_of(self, n: int) -> tuple[int, int]:
        """(start, end) of the block containing index n."""
        if n < self.breakpoints[-1]:
            i = bisect_right(self.breakpoints, n) - 1
            return self.breakpoints[i], self.breakpoints[i + 1]
        self._ensure_edges(n)
        i = bisect_right(self._ext, n) - 1
        return self._ext[i], self._ext[i + 1]

    def _edges_up_to(self, n: int) -> list[int]:
        """All edges needed to cover [0, n), ending with the first edge >= n."""
        edges = list(self.breakpoints)
        if edges[-1] < n:
            self._ensure_edges(n - 1)
            edges.extend(self._ext[1:])
        cut = bisect_left(edges, n)
        return edges[: cut + 1]

    def value(self, n: int) -> ExactScalar:
        start, end = self._block_of(n)
        return mpq(1, end - start)

    def prefix_sum(self, n: int) -> ExactScalar:
        if n <= 0:
            return mpq(0)
        edges = self._edges_up_to(n)
        total = mpq(0)
        for start, end in zip(edges, edges[1:]):
            total += mpq(min(end, n) - start, end - start)
        return total

    def set_sum(self, index_set: IndexSet, n: int) -> ExactScalar:
        if n <= 0:
            return mpq(0)
        edges = self._edges_up_to(n)
        total = mpq(0)
        for start, end in zip(edges, edges[1:]):
            c = index_set.count_range(start, min(end, n))
            if c:
                total += mpq(c, end - start)
        return total

    def admissibility(self) -> Admissibility:
        lengths = [c - b for b, c in zip(self.breakpoints, self.breakpoints[1:])]
        for i, (a, b) in enumerate(zip(lengths, lengths[1:])):
            if b < a:
                return Admissibility(False, f"weight increases at breakpoint {self.breakpoints[i + 1]}")
        return Admissibility(True, "block lengths non-decreasing; canonical extension unbounded")

    def describe(self) -> dict:
        return {"type": "block_constant", "breakpoints": list(self.breakpoints)}

    def __repr__(self):
        return f"BlockConstantWeight({len(self.breakpoints) - 1} stored blocks)"


class TableWeight(WeightSeq):
    """An explicit finite prefix of values followed by a tail rule."""

    def __init__(self, prefix: Iterable, tail: WeightSeq):
        values = tuple(exact(v) for v in prefix)
        if any(v <= 0 for v in values):
            raise ConfigError("table prefix values must be positive")
        self.prefix = values
        self.tail = tail
        self._cum = [mpq(0)]
        for v in values:
            self._cum.append(self._cum[-1] + v)

    def value(self, n: int) -> ExactScalar:
        if n < len(self.prefix):
            return self.prefix[n]
        return self.tail.value(n)

    def prefix_sum(self, n: int) -> ExactScalar:
        if n <= 0:
            return mpq(0)
        p = len(self.prefix)
        if n <= p:
            return self._cum[n]
        return self._cum[p] + self.tail.prefix_sum(n) - self.tail.prefix_sum(p)

    def set_sum(self, index_set: IndexSet, n: int) -> ExactScalar:
        p = len(self.prefix)
        head = mpq(0)
        for e in index_set.elements_up_to(min(n, p)):
            head += self.prefix[e]
        if n <= p:
            return head
        return head + self.tail.set_sum(index_set, n) - self.tail.set_sum(index_set, p)

    def admissibility(self) -> Admissibility:
        for i, (a, b) in enumerate(zip(self.prefix, self.prefix[1:])):
            if b > a:
                return Admissibility(False, f"prefix increases at index {i + 1}")
        tail_adm = self.tail.admissibility()
        if not tail_adm.ok:
            return Admissibility(False, f"tail not admissible: {tail_adm.reason}")
        p = len(self.prefix)
        if self.prefix and self.tail.value(p) > self.prefix[-1]:
            return Admissibility(False, "tail exceeds the prefix at the junction")
        return Admissibility(True, "non-increasing prefix splicing onto an admissible tail")

    def describe(self) -> dict:
        return {
            "type": "table",
            "prefix": [format_exact(v) for v in self.prefix],
            "tail": self.tail.describe(),
        }

    def __repr__(self):
        return f"TableWeight({len(self.prefix)} values, tail={self.tail!r})"


def weight_from_description(desc: dict) -> WeightSeq:
    if not isinstance(desc, dict) or "type" not in desc:
        raise ConfigError(f"bad weight description: {desc!r}")
    kind = desc["type"]
    try:
        if kind == "unit":
            return UnitWeight()
        if kind == "harmonic":
            return HarmonicWeight()
        if kind == "block_constant":
            return BlockConstantWeight(desc["breakpoints"])
        if kind == "table":
            return TableWeight(
                [parse_exact(v) for v in desc["prefix"]],
                weight_from_description(desc["tail"]),
            )
    except KeyError as missing:
        raise ConfigError(f"weight description missing key {missing}") from None
    raise ConfigError(f"unknown weight type {kind!r}")


# ---------------------------------------------------------------------------
# quotients and reports


def density_quotient(index_set: IndexSet, weight: WeightSeq, horizon: int) -> ExactScalar:
    """Exact prefix quotient ``Q_a(I, N)`` for ``N = horizon >= 1``."""
    if horizon < 1:
        raise ConfigError("horizon must be at least 1")
    return weight.set_sum(index_set, horizon) / weight.prefix_sum(horizon)


def _float_display(q: ExactScalar) -> float:
    # display-only conversion; never fed back into arithmetic
    return float(q)


@dataclass(frozen=True)
class DensityReport:
    """Quotients along a checkpoint grid plus tail-window extrema."""

    set_description: dict
    weight_description: dict
    horizon: int
    checkpoints: tuple[int, ...]
    quotients: tuple[ExactScalar, ...]
    tail_start: int
    lower_estimate: ExactScalar
    upper_estimate: ExactScalar

    def tail_items(self) -> list[tuple[int, ExactScalar]]:
        return [(n, q) for n, q in zip(self.checkpoints, self.quotients) if n >= self.tail_start]

    def to_json_dict(self) -> dict:
        return {
            "set": self.set_description,
            "weight": self.weight_description,
            "horizon": self.horizon,
            "tail_start": self.tail_start,
            "checkpoints": list(self.checkpoints),
            "quotients": [format_exact(q) for q in self.quotients],
            "lower_estimate": format_exact(self.lower_estimate),
            "upper_estimate": format_exact(self.upper_estimate),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["N", "Q_numerator", "Q_denominator", "Q_float_display"])
        for n, q in zip(self.checkpoints, self.quotients):
            writer.writerow([n, q.numerator, q.denominator, repr(_float_display(q))])
        return buf.getvalue()


def checkpoint_grid(
    horizon: int,
    ratio: ExactScalar = DEFAULT_CHECKPOINT_RATIO,
    hints: Iterable[int] = (),
) -> list[int]:
    """Geometric grid to the horizon, merged with structural hint points."""
    if horizon < 1:
        raise ConfigError("horizon must be at least 1")
    ratio = exact(ratio)
    if ratio <= 1:
        raise ConfigError("checkpoint ratio must exceed 1")
    points = {horizon}
    n = 1
    while n < horizon:
        points.add(n)
        scaled = (n * ratio.numerator) // ratio.denominator
        n = max(n + 1, int(scaled))
    for h in hints:
        if 1 <= h <= horizon:
            points.add(int(h))
    return sorted(points)


def estimate_densities(
    index_set: IndexSet,
    weight: WeightSeq,
    horizon: int,
    tail_fraction: ExactScalar = DEFAULT_TAIL_FRACTION,
    ratio: ExactScalar = DEFAULT_CHECKPOINT_RATIO,
) -> DensityReport:
    """Finite-horizon stand-ins for the lower and upper weighted densities.

    The tail window keeps checkpoints ``N >= tail_fraction * horizon``; the
    lower and upper estimates are the min and max of the quotient there.
    """
    tail_fraction = exact(tail_fraction)
    if not (0 < tail_fraction <= 1):
        raise ConfigError("tail fraction must lie in (0, 1]")
    cuts = checkpoint_grid(horizon, ratio, index_set.checkpoint_hints(horizon))
    totals = weight.prefix_sums(cuts)
    hits = weight.set_sums(index_set, cuts)
    quotients = [h / t for h, t in zip(hits, totals)]
    bound = tail_fraction * horizon
    tail_start = next(n for n in cuts if n >= bound)
    window = [q for n, q in zip(cuts, quotients) if n >= tail_start]
    return DensityReport(
        set_description=index_set.describe(),
        weight_description=weight.describe(),
        horizon=horizon,
        checkpoints=tuple(cuts),
        quotients=tuple(quotients),
        tail_start=tail_start,
        lower_estimate=min(window),
        upper_estimate=max(window),
    )


@dataclass(frozen=True)
class DualityResult:
    quotient: ExactScalar
    complement_quotient: ExactScalar

    @property
    def exact(self) -> bool:
        return self.quotient + self.complement_quotient == 1


def duality_check(index_set: IndexSet, weight: WeightSeq, horizon: int) -> DualityResult:
    """``Q_a(I, N) + Q_a(complement, N) = 1`` exactly, for any weights."""
    q = density_quotient(index_set, weight, horizon)
    qc = density_quotient(index_set.complement(), weight, horizon)
    return DualityResult(q, qc)


@dataclass(frozen=True)
class MonotonicityReport:
    """Finite-horizon rendering of the two-weight density comparison.

    When ``a_n / b_n`` is non-increasing and tends to zero, the weighted
    densities under ``a`` are squeezed between the ones under ``b``; over a
    finite grid the chain is asserted up to a tolerance.
    """

    lower_b: ExactScalar
    lower_a: ExactScalar
    upper_a: ExactScalar
    upper_b: ExactScalar
    tolerance: ExactScalar

    @property
    def chain_holds(self) -> bool:
        return (
            self.lower_b <= self.lower_a + self.tolerance
            and self.upper_a <= self.upper_b + self.tolerance
        )


def _ratio_certified(a: WeightSeq, b: WeightSeq) -> bool:
    # the one structurally certified family: admissible a against unit b,
    # where the ratio is a itself
    return isinstance(b, UnitWeight) and a.admissibility().ok


def monotonicity_check(
    index_set: IndexSet,
    weight_a: WeightSeq,
    weight_b: WeightSeq,
    horizon: int,
    tolerance: ExactScalar = mpq(1, 50),
) -> MonotonicityReport:
    if not _ratio_certified(weight_a, weight_b):
        raise ConfigError(
            "ratio a/b is not structurally certified as non-increasing and null; "
            "supported: admissible a against the unit weight"
        )
    rep_a = estimate_densities(index_set, weight_a, horizon)
    rep_b = estimate_densities(index_set, weight_b, horizon)
    return MonotonicityReport(
        lower_b=rep_b.lower_estimate,
        lower_a=rep_a.lower_estimate,
        upper_a=rep_a.upper_estimate,
        upper_b=rep_b.upper_estimate,
        tolerance=exact(tolerance),
    )


@dataclass(frozen=True)
class DropReport:
    """Indices where the weight drops by the factor alpha or more."""

    indices: tuple[int, ...]
    alpha: ExactScalar
    geometric_decay_exact: bool

    def as_index_set(self) -> ExplicitSet:
        return ExplicitSet(self.indices)


def ratio_drop_indices(weight: WeightSeq, alpha: ExactScalar, horizon: int) -> DropReport:
    """All ``n < horizon`` with ``a_{n+1} / a_n <= alpha``.

    Also certifies the geometric decay these drops force: along the k-th
    drop index (1-based), ``a_{n_k} <= a_0 * alpha**(k-1)`` for a
    non-increasing weight.
    """
    alpha = exact(alpha)
    if not (0 < alpha < 1):
        raise ConfigError("alpha must lie strictly between 0 and 1")
    drops = []
    prev = weight.value(0)
    for n in range(horizon):
        nxt = weight.value(n + 1)
        if nxt <= alpha * prev:
            drops.append(n)
        prev = nxt
    a0 = weight.value(0)
    decay = all(
        weight.value(nk) <= a0 * alpha ** (k - 1) for k, nk in enumerate(drops, start=1)
    )
    return DropReport(tuple(drops), alpha, decay)


@dataclass(frozen=True)
class ShiftGapResult:
    """Exact certificate that shifting a set can only lose quotient mass
    up to the alpha-drop correction.

    ``gap`` is ``Q_a(I+1, N) - alpha * S_I(N-1)/S(N) + alpha * S_D(N-1)/S(N)``
    with ``D`` the drop set of the weight; the middle sums stop at ``N-1``
    because the shifted prefix only sees sources below ``N-1``, and with
    that truncation the gap is nonnegative for every ``N >= 1``.
    """

    gap: ExactScalar
    shifted_quotient: ExactScalar
    base_quotient: ExactScalar
    drop_quotient: ExactScalar

    @property
    def nonnegative(self) -> bool:
        return self.gap >= 0

    @property
    def shift_never_gains(self) -> bool:
        return self.shifted_quotient <= self.base_quotient


def shift_quotient_gap(
    index_set: IndexSet,
    weight: WeightSeq,
    alpha: ExactScalar,
    horizon: int,
) -> ShiftGapResult:
    alpha = exact(alpha)
    if horizon < 1:
        raise ConfigError("horizon must be at least 1")
    adm = weight.admissibility()
    if not adm.ok:
        raise ConfigError(f"weight must be admissible: {adm.reason}")
    drops = ratio_drop_indices(weight, alpha, horizon).as_index_set()
    total = weight.prefix_sum(horizon)
    shifted_q = weight.set_sum(index_set.shift(1), horizon) / total
    base_q = weight.set_sum(index_set, horizon) / total
    drop_q = weight.set_sum(drops, horizon) / total
    gap = (
        shifted_q
        - alpha * weight.set_sum(index_set, horizon - 1) / total
        + alpha * weight.set_sum(drops, horizon - 1) / total
    )
    return ShiftGapResult(gap, shifted_q, base_q, drop_q)
