"""Minimum aberration search over column selections of the saturated design.

An n = 2^b run regular design is a choice of m distinct nonzero vectors of
GF(2)^b. Two runs r, r' coincide on column c exactly when c.(r + r') = 0, so
the coincidence of a run pair depends only on u = r + r' and every nonzero u
occurs for n/2 pairs. Hence

    K_t = sum_{u != 0} delta_u ** t / (n - 1),  delta_u = #{c in S : c.u = 0},

and the whole moment pattern follows from the 2^b - 1 numbers delta_u.
"""

from __future__ import annotations

import enum
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, islice
from typing import Sequence

import numpy as np

from .design import (
    WLP_MAX_FACTORS,
    DesignTable,
    MomentPattern,
    Order,
    WordLengthPattern,
    compare_patterns,
    generalized_wlp,
    moment_pattern,
    power_sums,
)
from .regular import GeneratorSpec, SpecificationError, build_design, generators_for_columns

log = logging.getLogger(__name__)

VALIDATED_RUN_SIZES = (8, 16, 32)
# Power sums of delta_u <= 31 over 31 vectors stay below 2**63 up to t = 11.
_INT64_DEPTH = 11
_CHUNK = 1 << 15


class SearchError(RuntimeError):
    pass


class ColumnUniverse:
    """The 2^b - 1 nonzero GF(2)^b vectors and their +-1 columns."""

    def __init__(self, b: int):
        if b < 1:
            raise SpecificationError("b must be positive")
        self.b = b
        self.n = 1 << b
        self.vectors = tuple(range(1, self.n))
        # orth[u - 1, c - 1] = 1 iff c.u = 0 over GF(2)
        u = np.arange(1, self.n)
        parity = np.zeros((self.n - 1, self.n - 1), dtype=np.int64)
        both = u[:, None] & u[None, :]
        while both.any():
            parity ^= both & 1
            both >>= 1
        self.orth = (1 - parity).astype(np.int64)

    def __len__(self):
        return len(self.vectors)

    def column(self, vector: int) -> tuple[int, ...]:
        """Product of the basic columns named by ``vector`` (bit j = factor j)."""
        b = self.b
        out = []
        for r in range(self.n):
            level = 1
            for j in range(b):
                if vector >> j & 1:
                    level *= 1 if r >> (b - 1 - j) & 1 else -1
            out.append(level)
        return tuple(out)

    def deltas(self, selection: Sequence[int]) -> np.ndarray:
        idx = np.asarray(selection, dtype=np.int64) - 1
        return self.orth[:, idx].sum(axis=1)


@dataclass(frozen=True)
class SearchConfig:
    exhaustive_budget: int = 10**6
    restarts: int = 200
    seed: int = 0
    objective_depth: int | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise SpecificationError("restarts must be at least 1")
        if self.exhaustive_budget < 1:
            raise SpecificationError("exhaustive_budget must be at least 1")


class SearchMode(enum.Enum):
    EXHAUSTIVE = "exhaustive"
    HEURISTIC = "heuristic"


@dataclass
class SearchResult:
    design: DesignTable
    pattern: MomentPattern
    wlp: WordLengthPattern | None
    mode: SearchMode
    evaluations: int
    columns: tuple[int, ...] = ()
    generators: list[GeneratorSpec] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.mode is SearchMode.EXHAUSTIVE

    @property
    def resolution(self) -> int | None:
        if self.wlp is not None:
            return self.wlp.resolution
        from .design import resolution

        return resolution(self.design)


def _key(deltas, m: int, depth: int) -> tuple[int, ...]:
    hist = np.bincount(np.asarray(deltas, dtype=np.int64), minlength=m + 1)
    return power_sums(hist.tolist(), depth)


def _check_request(n: int, m: int) -> int:
    if n not in VALIDATED_RUN_SIZES:
        raise SpecificationError(f"run size {n} not in {VALIDATED_RUN_SIZES}")
    b = n.bit_length() - 1
    if not b <= m <= n - 1:
        raise SpecificationError(f"m={m} outside {b}..{n - 1} for n={n}")
    return b


def search_min_aberration(n: int, m: int, config: SearchConfig | None = None) -> SearchResult:
    """Best regular n-run m-factor design by the lexicographic moment pattern."""
    config = config or SearchConfig()
    b = _check_request(n, m)
    depth = m if config.objective_depth is None else config.objective_depth
    if not 1 <= depth <= m:
        raise SpecificationError(f"objective depth {depth} outside 1..{m}")
    universe = ColumnUniverse(b)
    size = len(universe)
    side = min(m, size - m)
    if math.comb(size, side) <= config.exhaustive_budget:
        selection, evaluations = _exhaustive(universe, m, depth)
        mode = SearchMode.EXHAUSTIVE
    else:
        selection, evaluations = _local_search(universe, m, depth, config)
        mode = SearchMode.HEURISTIC
    return _result(universe, selection, mode, evaluations)


def _result(universe: ColumnUniverse, selection, mode, evaluations) -> SearchResult:
    ordered, gens = generators_for_columns(universe.b, sorted(selection))
    design = build_design(universe.b, gens)
    m = design.m
    wlp = generalized_wlp(design) if m <= WLP_MAX_FACTORS else None
    return SearchResult(design, moment_pattern(design), wlp, mode, evaluations,
                        tuple(ordered), gens)


def _exhaustive(universe: ColumnUniverse, m: int, depth: int):
    size = len(universe)
    complement = size - m < m
    side = size - m if complement else m
    total = universe.orth.sum(axis=1)
    combos = combinations(range(size), side)
    best_key = None
    best_sel = None
    evaluations = 0
    while True:
        chunk = list(islice(combos, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.int64).reshape(len(chunk), side)
        part = universe.orth[:, idx].sum(axis=2)  # (vectors, chunk)
        deltas = total[:, None] - part if complement else part
        evaluations += len(chunk)
        full_rank = deltas.max(axis=0) < m
        if not full_rank.any():
            continue
        deltas = deltas[:, full_rank]
        idx = idx[full_rank]
        hist = np.stack([(deltas == v).sum(axis=0) for v in range(m + 1)], axis=1)
        uniq, first = np.unique(hist, axis=0, return_index=True)
        key, pos = min((power_sums(h.tolist(), depth), int(p)) for h, p in zip(uniq, first))
        # strict improvement keeps the earliest selection in enumeration order
        if best_key is None or key < best_key:
            best_key, best_sel = key, idx[pos]
    if best_sel is None:
        raise SearchError(f"no full-rank selection of {m} columns exists")
    chosen = set(best_sel.tolist())
    if complement:
        chosen = set(range(size)) - chosen
    return [c + 1 for c in sorted(chosen)], evaluations


def _random_selection(universe: ColumnUniverse, m: int, rng: random.Random) -> list[int]:
    from .regular import gf2_rank

    for _ in range(1000):
        sel = rng.sample(universe.vectors, m)
        if gf2_rank(sel) == universe.b:
            return sel
    raise SearchError(f"could not draw a full-rank selection of {m} columns")


def _local_search(universe: ColumnUniverse, m: int, depth: int, config: SearchConfig):
    rng = random.Random(config.seed)
    prefix = min(depth, _INT64_DEPTH)
    powers = np.arange(1, prefix + 1)
    best_key = None
    best_sel = None
    evaluations = 0
    for _ in range(config.restarts):
        sel = _random_selection(universe, m, rng)
        deltas = universe.deltas(sel)
        key = _key(deltas, m, depth)
        evaluations += 1
        while True:
            chosen = set(sel)
            unsel = [v for v in universe.vectors if v not in chosen]
            moves = [(o, i) for o in range(m) for i in range(len(unsel))]
            rng.shuffle(moves)
            out_idx = np.array([sel[o] - 1 for o, _ in moves])
            in_idx = np.array([unsel[i] - 1 for _, i in moves])
            cand = deltas[:, None] - universe.orth[:, out_idx] + universe.orth[:, in_idx]
            evaluations += len(moves)
            valid = cand.max(axis=0) < m
            sums = (cand[:, :, None] ** powers).sum(axis=0)  # (moves, prefix)
            current = np.array(key[:prefix])
            diff = sums != current
            differs = diff.any(axis=1)
            first = diff.argmax(axis=1)
            rows = np.arange(len(moves))
            better = differs & (sums[rows, first] < current[first]) & valid
            if depth > prefix:
                tied = np.flatnonzero(~differs & valid)
                for pos in tied:
                    if _key(cand[:, pos], m, depth) < key:
                        better[pos] = True
            hits = np.flatnonzero(better)
            if hits.size == 0:
                break
            pos = hits[0]
            o, i = moves[pos]
            sel = list(sel)
            sel[o] = unsel[i]
            deltas = cand[:, pos].copy()
            key = _key(deltas, m, depth)
        if best_key is None or key < best_key:
            best_key, best_sel = key, sorted(sel)
    return best_sel, evaluations


def compare_results(a: SearchResult, b: SearchResult) -> Order:
    return compare_patterns(a.pattern.moments, b.pattern.moments)


def pattern_from_selection(universe: ColumnUniverse, selection: Sequence[int]) -> MomentPattern:
    """Exact moment pattern of a column selection via the delta_u identity."""
    m = len(selection)
    sums = _key(universe.deltas(selection), m, m)
    return MomentPattern(tuple(Fraction(s, universe.n - 1) for s in sums), universe.n, m)
