"""Functional-dependence closure and node-relabelling orbits on variable subsets.

Two reductions shrink the LP column space:

* every subset has the same entropy as its closure under the FD rules, so
  only closed sets need columns;
* relabelling storage nodes maps a concatenation scheme onto itself, so all
  subsets in one orbit share an entropy and one column per orbit suffices.

The canonical column of a subset ``a`` is ``min(cl(sigma . a))`` over the
whole symmetric group, compared as bitmasks.
"""
from __future__ import annotations

import itertools
import re
from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .constraints import fd_rules
from .entset import ALPHA, BETA, LinearConstraint, deduplicate, members
from .model import CapacityError, Repair, Source, Storage, Universe

MAX_SCAN_BITS = 22


class ConsistencyError(RuntimeError):
    """A constraint mentions a column the orbit table does not cover."""


# -- closure ---------------------------------------------------------------

class ClosureOracle:
    """Least fixpoint of a rule list, memoised per input set.

    The memo is a plain dict; concurrent lookups from threads are safe under
    the GIL because entries are only ever added with their final value.
    """

    def __init__(self, rules, n_vars):
        self.rules = list(rules)
        self.n_vars = n_vars
        self.memo: dict[int, int] = {}

    @classmethod
    def for_universe(cls, universe: Universe) -> "ClosureOracle":
        return cls(fd_rules(universe), universe.size)

    def closure(self, s: int) -> int:
        hit = self.memo.get(s)
        if hit is not None:
            return hit
        cur = s
        changed = True
        while changed:
            changed = False
            for rule in self.rules:
                if cur & rule.determiners == rule.determiners and cur | rule.determined != cur:
                    cur |= rule.determined
                    changed = True
        self.memo[s] = cur
        return cur

    __call__ = closure

    @cached_property
    def table(self) -> np.ndarray:
        """Closure of every subset, indexed by mask."""
        if self.n_vars > _kernels.MAX_TABLE_BITS:
            raise CapacityError(f"closure table over {self.n_vars} variables is too large")
        det = [r.determiners for r in self.rules]
        dep = [r.determined for r in self.rules]
        return _kernels.closure_table(self.n_vars, det, dep)


def fd_closure(oracle: ClosureOracle, s: int) -> int:
    return oracle.closure(s)


# -- permutations ----------------------------------------------------------

@dataclass(frozen=True)
class NodePermutation:
    """A bijection on node labels 1..n; ``images[i - 1]`` is the image of ``i``."""

    images: tuple

    def __post_init__(self):
        imgs = tuple(int(x) for x in self.images)
        if sorted(imgs) != list(range(1, len(imgs) + 1)):
            raise ValueError(f"{imgs} is not a permutation of 1..{len(imgs)}")
        object.__setattr__(self, "images", imgs)

    @property
    def n(self):
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "NodePermutation") -> "NodePermutation":
        """``(self * other)(i) == self(other(i))``."""
        return NodePermutation(tuple(self(other(i)) for i in range(1, self.n + 1)))

    def inverse(self) -> "NodePermutation":
        inv = [0] * self.n
        for i, img in enumerate(self.images, start=1):
            inv[img - 1] = i
        return NodePermutation(tuple(inv))

    def apply_set(self, nodes) -> frozenset:
        return frozenset(self(i) for i in nodes)

    def is_identity(self) -> bool:
        return self.images == tuple(range(1, self.n + 1))

    @classmethod
    def identity(cls, n: int) -> "NodePermutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_cycles(cls, n: int, text: str) -> "NodePermutation":
        """Parse cycle notation such as ``"(1 2)(3 4)"`` or ``"(1,2,3)"``."""
        images = list(range(1, n + 1))
        for cyc in re.findall(r"\(([^()]*)\)", text):
            pts = [int(x) for x in re.split(r"[\s,]+", cyc.strip()) if x]
            for a, b in zip(pts, pts[1:] + pts[:1]):
                images[a - 1] = b
        return cls(tuple(images))

    def __str__(self):
        seen, cycles = set(), []
        for start in range(1, self.n + 1):
            if start in seen or self(start) == start:
                continue
            cyc, x = [], start
            while x not in seen:
                seen.add(x)
                cyc.append(x)
                x = self(x)
            cycles.append("(" + " ".join(map(str, cyc)) + ")")
        return "".join(cycles) or "()"


def symmetric_group(n: int) -> list[NodePermutation]:
    """All n! permutations in lexicographic order of their image tuples."""
    return [NodePermutation(p) for p in itertools.permutations(range(1, n + 1))]


def act_on_var(sigma: NodePermutation, v):
    if isinstance(v, Source):
        return v
    if isinstance(v, Storage):
        return Storage(sigma(v.i))
    return Repair(sigma(v.i), sigma(v.j), tuple(sigma(x) for x in v.helpers))


def induced_action(sigma: NodePermutation, universe: Universe) -> tuple:
    """Position map of the relabelling: variable ``p`` goes to position ``image[p]``."""
    if sigma.n != universe.params.n:
        raise ValueError("permutation degree does not match the node count")
    return tuple(universe.index[act_on_var(sigma, v)] for v in universe.vars)


def apply_action(image, mask: int) -> int:
    out = 0
    for p in members(mask):
        out |= 1 << image[p]
    return out


# -- orbit tables ----------------------------------------------------------

class _DenseCanon(Mapping):
    """Read-only mask -> canonical mask view over a full-length array."""

    def __init__(self, array):
        self.array = array

    def __getitem__(self, mask):
        if not 0 < mask < len(self.array):
            raise KeyError(mask)
        return int(self.array[mask])

    def __iter__(self):
        return iter(range(1, len(self.array)))

    def __len__(self):
        return len(self.array) - 1


@dataclass
class OrbitTable:
    canon: Mapping
    reps: list
    group_size: int = 1
    orbits: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, mask: int) -> int:
        return self.canon[mask]

    def column_of(self, mask: int) -> int:
        """Column index (position in ``reps``) of a subset's canonical set."""
        return self._col[self.canon[mask]]

    @cached_property
    def _col(self):
        return {r: i for i, r in enumerate(self.reps)}


def orbit_table(oracle: ClosureOracle, universe: Universe, group, domain) -> OrbitTable:
    """Canonical closed representative of each domain set under ``group``.

    Computed literally as ``min(cl(sigma . a))``; see :func:`dense_orbit_table`
    for the whole-lattice version used by the LP builder.
    """
    images = [induced_action(g, universe) for g in group]
    canon, orbits = {}, {}
    for a in domain:
        if a in canon:
            continue
        rep = min(oracle.closure(apply_action(img, a)) for img in images)
        canon[a] = rep
        orbits.setdefault(rep, []).append(a)
    reps = sorted(orbits)
    return OrbitTable(canon, reps, len(images), orbits)


def group_images(universe: Universe, group=None) -> np.ndarray:
    group = symmetric_group(universe.params.n) if group is None else group
    return np.array([induced_action(g, universe) for g in group], dtype=np.int64)


def dense_orbit_table(oracle: ClosureOracle, universe: Universe, group=None) -> OrbitTable:
    """Orbit table over every nonempty subset, computed with the subset kernels."""
    images = group_images(universe, group)
    canon = _kernels.orbit_min(oracle.table, images)
    reps = [int(r) for r in np.unique(canon[1:])]
    return OrbitTable(_DenseCanon(canon), reps, len(images))


@dataclass
class ReductionMaps:
    """Everything the reduced LP builder needs for one instance."""

    universe: Universe
    oracle: ClosureOracle
    table: OrbitTable

    @property
    def columns(self):
        return self.table.reps

    @cached_property
    def colmap(self) -> np.ndarray:
        """Column index of every subset's canonical set; -1 for the empty set."""
        canon = self.table.canon.array
        reps = np.asarray(self.table.reps, dtype=np.int64)
        cols = np.searchsorted(reps, canon)
        cols[0] = -1
        return cols.astype(np.int64)


def reduction_maps(universe: Universe, symmetric=True) -> ReductionMaps:
    oracle = ClosureOracle.for_universe(universe)
    group = None if symmetric else [_identity_of(universe)]
    return ReductionMaps(universe, oracle, dense_orbit_table(oracle, universe, group))


def _identity_of(universe):
    return NodePermutation.identity(universe.params.n)


# -- irreducible sets ------------------------------------------------------

def _irreducible_mask(oracle: ClosureOracle, n_vars: int) -> np.ndarray:
    table = oracle.table
    masks = np.arange(1 << n_vars, dtype=np.int64)
    ok = np.ones(1 << n_vars, dtype=bool)
    for p in range(n_vars):
        bit = np.int64(1) << p
        has = (masks & bit) != 0
        determined = (table[masks ^ bit] & bit) != 0
        ok &= ~(has & determined)
    ok[0] = False
    return ok


def irreducible_sets(oracle: ClosureOracle, universe: Universe):
    """Split the irreducible sets into maximal and non-maximal ones.

    A set is irreducible when no proper subset determines it, which (by
    monotonicity of the closure) means no member lies in the closure of the
    others.  Maximal irreducible sets are those whose closure is the whole
    universe; they all carry the joint entropy of the system.
    """
    n_vars = universe.size
    if n_vars > MAX_SCAN_BITS:
        raise CapacityError(
            f"exhaustive scan over 2^{n_vars} subsets is too large; use the orbit tables directly")
    ok = _irreducible_mask(oracle, n_vars)
    full = universe.full
    irr = np.nonzero(ok)[0]
    top = oracle.table[irr] == full
    maximal = [int(m) for m in irr[top]]
    nonmaximal = [int(m) for m in irr[~top]]
    return maximal, nonmaximal


def dimension_list(oracle: ClosureOracle, universe: Universe) -> list[int]:
    """One maximal irreducible set plus every non-maximal one.

    The maximal set chosen is the smallest mask, i.e. ``{S}``.
    """
    maximal, nonmaximal = irreducible_sets(oracle, universe)
    return [min(maximal)] + nonmaximal


def generator_of(oracle: ClosureOracle, closed: int, candidates) -> int:
    """Smallest (by size, then mask) candidate whose closure equals ``closed``."""
    best = None
    for c in candidates:
        if oracle.closure(c) == closed:
            key = (bin(c).count("1"), c)
            if best is None or key < best[0]:
                best = (key, c)
    if best is None:
        raise KeyError(closed)
    return best[1]


# -- constraint rewriting --------------------------------------------------

def rewrite_constraints(constraints, table: OrbitTable) -> list[LinearConstraint]:
    """Substitute every entropy column by its canonical set, then deduplicate.

    Parameter columns pass through unchanged.  Rows that cancel to ``0 = 0``
    or ``0 >= 0`` are dropped.
    """
    canon = table.canon

    def mapping(col):
        if col in (ALPHA, BETA):
            return col
        try:
            return canon[col]
        except KeyError:
            raise ConsistencyError(f"column {col} is outside the orbit table domain") from None

    rewritten = []
    for con in constraints:
        rewritten.append(con.remap(mapping))
    return deduplicate(rewritten)


def rewrite_arrays(masks, coefs, colmap, chunk=1 << 19):
    """Array version of :func:`rewrite_constraints` for homogeneous ``>= 0`` rows.

    ``colmap[mask]`` is the column of a subset (-1 for the empty set).  Rows
    are processed in chunks to bound memory.  Returns ``(cols, vals, le)``
    for the distinct nontrivial rows, sorted; ``le`` marks rows that were
    negated during normalisation and therefore read ``<= 0``.
    """
    colmap = np.asarray(colmap, dtype=np.int64)
    parts = []
    for start in range(0, len(masks), chunk):
        cols, vals, flipped = _kernels.rewrite_rows(masks[start:start + chunk],
                                                    coefs[start:start + chunk], colmap)
        keep = cols[:, 0] >= 0
        key = np.concatenate([cols[keep], vals[keep], flipped[keep, None].astype(np.int64)], axis=1)
        parts.append(np.unique(key, axis=0))
    w = masks.shape[1]
    if not parts:
        return (np.zeros((0, w), np.int64), np.zeros((0, w), np.int64), np.zeros(0, bool))
    key = np.unique(np.concatenate(parts), axis=0)
    return key[:, :w], key[:, w:2 * w], key[:, 2 * w] == 1
