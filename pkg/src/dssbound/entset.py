"""Variable subsets, linear constraints over joint entropies, elemental inequalities.

A ``VarSet`` is a plain ``int`` bitmask over universe positions.  Entropy
columns are keyed by their (nonempty) mask; the two capacity parameters use
the reserved keys :data:`ALPHA` and :data:`BETA`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd, lcm
from typing import Iterable, Iterator

import numpy as np

from . import _kernels
from .model import CapacityError, Universe

MAX_BITS = 64

ALPHA = -1
BETA = -2

LE, GE, EQ = "<=", ">=", "="
_FLIP = {LE: GE, GE: LE, EQ: EQ}

PROVENANCE_TAGS = (
    "elemental-H", "elemental-I", "storage-enc", "storage-cap",
    "repair-enc", "repair-cap", "repair-dec", "reconstruct",
)


# -- VarSet helpers --------------------------------------------------------

def varset(universe: Universe, variables: Iterable) -> int:
    mask = 0
    for v in variables:
        mask |= 1 << universe.index[v]
    return mask


def members(mask: int) -> list[int]:
    """Bit positions set in ``mask``, ascending."""
    out = []
    p = 0
    while mask:
        if mask & 1:
            out.append(p)
        mask >>= 1
        p += 1
    return out


def render(universe: Universe, mask: int) -> str:
    names = universe.names()
    return "{" + ",".join(names[p] for p in members(mask)) + "}"


def parse_varset(universe: Universe, text: str) -> int:
    """Inverse of :func:`render`; braces optional."""
    body = text.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    # repair names in the long form contain commas inside braces
    parts, depth, cur = [], 0, ""
    for ch in body:
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
            continue
        depth += ch in "[{"
        depth -= ch in "]}"
        cur += ch
    if cur.strip():
        parts.append(cur)
    return varset(universe, (universe.parse_var(p) for p in parts))


def column_name(universe: Universe, key: int) -> str:
    if key == ALPHA:
        return "alpha"
    if key == BETA:
        return "beta"
    return "H" + render(universe, key)


def check_width(n_vars: int):
    if n_vars > MAX_BITS:
        raise CapacityError(f"universe of {n_vars} variables exceeds the {MAX_BITS}-bit VarSet width")


# -- constraints -----------------------------------------------------------

@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coeffs[c] * col_c) relation rhs`` with exact rational data.

    ``coeffs`` is stored as a tuple of ``(column, coefficient)`` pairs sorted
    by column; zero coefficients are never stored.
    """

    coeffs: tuple
    relation: str
    rhs: Fraction = Fraction(0)
    provenance: str = ""

    @classmethod
    def build(cls, terms, relation, rhs=0, provenance=""):
        acc: dict[int, Fraction] = {}
        for col, coef in terms:
            acc[col] = acc.get(col, Fraction(0)) + Fraction(coef)
        items = tuple(sorted((c, v) for c, v in acc.items() if v != 0))
        if relation not in _FLIP:
            raise ValueError(f"unknown relation {relation!r}")
        return cls(items, relation, Fraction(rhs), provenance)

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    @property
    def columns(self):
        return [c for c, _ in self.coeffs]

    def is_trivial(self) -> bool:
        """True when no column survives and the relation holds for the constant."""
        if self.coeffs:
            return False
        return {LE: 0 <= self.rhs, GE: 0 >= self.rhs, EQ: self.rhs == 0}[self.relation]

    def evaluate(self, values) -> Fraction:
        """Left-hand side at ``values`` (a mapping or callable keyed by column)."""
        get = values if callable(values) else values.__getitem__
        return sum((v * get(c) for c, v in self.coeffs), Fraction(0))

    def holds(self, values, tol=0) -> bool:
        lhs = self.evaluate(values)
        if self.relation == LE:
            return lhs <= self.rhs + tol
        if self.relation == GE:
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol

    def normalized(self) -> "LinearConstraint":
        """Integer coefficients with gcd 1 and a positive leading coefficient."""
        if not self.coeffs:
            return self
        scale = lcm(*(v.denominator for _, v in self.coeffs), self.rhs.denominator)
        ints = [int(v * scale) for _, v in self.coeffs]
        rhs = self.rhs * scale
        g = gcd(*ints, int(rhs))
        sign = -1 if ints[0] < 0 else 1
        factor = Fraction(sign, g)
        coeffs = tuple((c, Fraction(v) * factor) for (c, _), v in zip(self.coeffs, ints))
        relation = self.relation if sign > 0 else _FLIP[self.relation]
        return LinearConstraint(coeffs, relation, rhs * factor, self.provenance)

    def key(self):
        """Hashable identity of the normalised form (provenance ignored)."""
        nc = self.normalized()
        return nc.coeffs, nc.relation, nc.rhs

    def remap(self, mapping) -> "LinearConstraint":
        return LinearConstraint.build(((mapping(c), v) for c, v in self.coeffs),
                                      self.relation, self.rhs, self.provenance)

    def describe(self, universe: Universe) -> str:
        parts = []
        for c, v in self.coeffs:
            sign = "-" if v < 0 else "+"
            mag = abs(v)
            coef = "" if mag == 1 else f"{mag} "
            parts.append(f"{sign} {coef}{column_name(universe, c)}")
        lhs = " ".join(parts).lstrip("+ ") or "0"
        return f"{lhs} {self.relation} {self.rhs}"


def deduplicate(constraints: Iterable[LinearConstraint], drop_trivial=True) -> list[LinearConstraint]:
    """Normalise, drop trivially true rows, keep the first of each duplicate."""
    seen = set()
    out = []
    for con in constraints:
        nc = con.normalized()
        if drop_trivial and nc.is_trivial():
            continue
        k = (nc.coeffs, nc.relation, nc.rhs)
        if k in seen:
            continue
        seen.add(k)
        out.append(nc)
    return out


# -- elemental inequalities ------------------------------------------------

def elemental_count(n_vars: int) -> int:
    if n_vars < 2:
        return n_vars
    return n_vars + comb(n_vars, 2) * 2 ** (n_vars - 2)


def elemental_arrays(n_vars: int):
    """Elemental rows as ``(masks, coefs)`` arrays of shape ``(rows, 4)``.

    Each row reads ``sum(coefs[t] * H(masks[t])) >= 0``; ``H(0)`` terms are
    zero and carry coefficient -1 only in the unconditioned mutual
    information rows.
    """
    check_width(n_vars)
    if n_vars > _kernels.MAX_TABLE_BITS:
        raise CapacityError(f"{n_vars} variables is too many for an explicit elemental table")
    return _kernels.elemental_terms(n_vars)


def elemental_inequalities(universe: Universe) -> list[LinearConstraint]:
    """The conditional-entropy rows followed by the conditional mutual information rows.

    Conditional-entropy rows come first, one per variable in universe order:
    ``H(V) - H(V - {a}) >= 0``.  Then, for each pair ``a < b`` and each
    ``C`` in ascending mask order over the remaining variables,
    ``H(aC) + H(bC) - H(abC) - H(C) >= 0`` (the ``H(C)`` term vanishes when
    ``C`` is empty).
    """
    n_vars = universe.size
    masks, coefs = elemental_arrays(n_vars)
    out = []
    one = Fraction(1)
    for row in range(masks.shape[0]):
        terms = [(int(m), one * int(c)) for m, c in zip(masks[row], coefs[row]) if c and m]
        tag = "elemental-H" if row < n_vars else "elemental-I"
        out.append(LinearConstraint.build(terms, GE, 0, tag))
    return out


def subset_lattice(universe: Universe) -> Iterator[int]:
    """Every nonempty VarSet in ascending mask order."""
    check_width(universe.size)
    return iter(range(1, 1 << universe.size))


def entropy_vector(universe_size: int, entropy_of) -> np.ndarray:
    """Tabulate ``entropy_of(mask)`` over all masks (index 0 is the empty set)."""
    return np.array([0.0] + [entropy_of(m) for m in range(1, 1 << universe_size)])
