"""The storage-system constraint families as linear constraints on entropy columns."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .entset import ALPHA, BETA, EQ, LE, LinearConstraint
from .model import Repair, Storage, Universe, helper_sets


@dataclass(frozen=True)
class FdRule:
    """``H(determined | determiners) = 0``."""

    determiners: int
    determined: int


def _repairs_from(universe: Universe, i: int):
    return [v for v in universe.repair_vars() if v.i == i]


def _helper_mask(universe: Universe, j: int, D) -> int:
    mask = 0
    for i in D:
        mask |= universe.bit(Repair(i, j, D))
    return mask


def _storage_mask(universe: Universe, nodes) -> int:
    mask = 0
    for i in nodes:
        mask |= universe.bit(Storage(i))
    return mask


def _zero_conditional(a: int, b: int, tag: str) -> LinearConstraint:
    # H(b | a) = 0  <=>  H(a u b) - H(a) = 0
    return LinearConstraint.build([(a | b, 1), (a, -1)], EQ, 0, tag)


def encoding_constraints(universe: Universe) -> list[LinearConstraint]:
    """Storage encoding H(Y_i|S)=0 for every node, then repair encoding H(U|Y_i)=0."""
    s = 1 << universe.source
    n = universe.params.n
    out = [_zero_conditional(s, universe.bit(Storage(i)), "storage-enc") for i in range(1, n + 1)]
    for v in universe.repair_vars():
        out.append(_zero_conditional(universe.bit(Storage(v.i)), universe.bit(v), "repair-enc"))
    return out


def capacity_constraints(universe: Universe, alpha=None, beta=None) -> list[LinearConstraint]:
    """H(Y_i) <= alpha and H(U) <= beta.

    Passing ``None`` for a capacity makes it parametric: the row becomes
    ``H(.) - alpha_col <= 0`` against the reserved :data:`ALPHA` / :data:`BETA`
    column instead of a constant right-hand side.
    """
    n = universe.params.n
    out = []
    for i in range(1, n + 1):
        m = universe.bit(Storage(i))
        if alpha is None:
            out.append(LinearConstraint.build([(m, 1), (ALPHA, -1)], LE, 0, "storage-cap"))
        else:
            out.append(LinearConstraint.build([(m, 1)], LE, alpha, "storage-cap"))
    for v in universe.repair_vars():
        m = universe.bit(v)
        if beta is None:
            out.append(LinearConstraint.build([(m, 1), (BETA, -1)], LE, 0, "repair-cap"))
        else:
            out.append(LinearConstraint.build([(m, 1)], LE, beta, "repair-cap"))
    return out


def decoding_constraints(universe: Universe, all_reconstruction_sets=False) -> list[LinearConstraint]:
    """Exact repair H(Y_j | U_{D[j,D]}) = 0, then reconstruction H(S | Y_K) = 0.

    Reconstruction rows are emitted for ``|K| = k`` only; larger ``K`` follow
    by monotonicity.  ``all_reconstruction_sets=True`` adds every ``|K| >= k``
    for cross-checking that claim.
    """
    p = universe.params
    out = []
    for j in range(1, p.n + 1):
        yj = universe.bit(Storage(j))
        for D in helper_sets(p.n, p.d, j):
            out.append(_zero_conditional(_helper_mask(universe, j, D), yj, "repair-dec"))
    s = 1 << universe.source
    sizes = range(p.k, p.n + 1) if all_reconstruction_sets else [p.k]
    for size in sizes:
        for K in itertools.combinations(range(1, p.n + 1), size):
            out.append(_zero_conditional(_storage_mask(universe, K), s, "reconstruct"))
    return out


def system_constraints(universe: Universe, alpha=None, beta=None, all_reconstruction_sets=False):
    return (encoding_constraints(universe)
            + capacity_constraints(universe, alpha, beta)
            + decoding_constraints(universe, all_reconstruction_sets))


def fd_rules(universe: Universe) -> list[FdRule]:
    """The four zero-conditional-entropy families as functional dependencies.

    Rules sharing a determiner set are merged, so S determines all Y_i in
    one rule and Y_i determines every U it sends in one rule.
    """
    p = universe.params
    s = 1 << universe.source
    rules: dict[int, int] = {}

    def add(det, dep):
        rules[det] = rules.get(det, 0) | dep

    add(s, _storage_mask(universe, range(1, p.n + 1)))
    for i in range(1, p.n + 1):
        sent = 0
        for v in _repairs_from(universe, i):
            sent |= universe.bit(v)
        if sent:
            add(universe.bit(Storage(i)), sent)
    for j in range(1, p.n + 1):
        for D in helper_sets(p.n, p.d, j):
            add(_helper_mask(universe, j, D), universe.bit(Storage(j)))
    for K in itertools.combinations(range(1, p.n + 1), p.k):
        add(_storage_mask(universe, K), s)
    return [FdRule(det, dep) for det, dep in rules.items()]
