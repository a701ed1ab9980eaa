"""Storage-system instances, the random-variable universe and the max-flow bound.

Nodes are labelled 1..n throughout.  A universe fixes a total order on its
variables; bit ``p`` of a :data:`VarSet` mask refers to ``universe.vars[p]``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Union


class ParameterError(ValueError):
    """Raised for (n, k, d, alpha, beta) tuples outside the model."""


class CapacityError(ValueError):
    """Raised when an instance is too large for the requested computation."""


def as_rational(value, name="value") -> Fraction:
    """Convert ints, Fractions, "p/q" strings or decimal strings exactly.

    Floats are accepted only when they are exactly representable as a short
    decimal; ``0.1`` becomes ``1/10``, not the binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ParameterError(f"{name}: booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"{name}: cannot parse {value!r} as a rational") from exc
    raise ParameterError(f"{name}: unsupported type {type(value).__name__}")


@dataclass(frozen=True)
class DssParams:
    n: int
    k: int
    d: int
    alpha: Fraction | None = None
    beta: Fraction | None = None

    def __post_init__(self):
        for name in ("n", "k", "d"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ParameterError(f"{name} must be an integer, got {v!r}")
        if not (1 <= self.k <= self.d <= self.n - 1):
            raise ParameterError(
                f"need 1 <= k <= d <= n-1, got n={self.n}, k={self.k}, d={self.d}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if v is None:
                continue
            v = as_rational(v, name)
            if v < 0:
                raise ParameterError(f"{name} must be nonnegative, got {v}")
            object.__setattr__(self, name, v)

    def with_capacities(self, alpha, beta) -> "DssParams":
        return DssParams(self.n, self.k, self.d, alpha, beta)

    def require_capacities(self):
        if self.alpha is None or self.beta is None:
            raise ParameterError("alpha and beta must both be given")
        return self.alpha, self.beta

    def as_dict(self):
        out = {"n": self.n, "k": self.k, "d": self.d}
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if v is not None:
                out[name] = str(v)
        return out


# -- variable identifiers --------------------------------------------------

@dataclass(frozen=True)
class Source:
    def sort_key(self):
        return (0,)

    def __str__(self):
        return "S"


@dataclass(frozen=True)
class Storage:
    i: int

    def sort_key(self):
        return (1, self.i)

    def __str__(self):
        return f"Y{self.i}"


@dataclass(frozen=True)
class Repair:
    """U_{i[j,D]}: sent by helper ``i`` to repair node ``j`` with helper set ``helpers``."""

    i: int
    j: int
    helpers: tuple[int, ...]

    def __post_init__(self):
        helpers = tuple(sorted(self.helpers))
        object.__setattr__(self, "helpers", helpers)
        if self.i not in helpers:
            raise ParameterError(f"helper {self.i} not in helper set {helpers}")
        if self.j in helpers:
            raise ParameterError(f"failed node {self.j} cannot help its own repair")
        if len(set(helpers)) != len(helpers):
            raise ParameterError(f"repeated helper in {helpers}")

    def sort_key(self):
        return (2, self.j, self.helpers, self.i)

    def render(self, n: int) -> str:
        if len(self.helpers) == n - 1:
            return f"U{self.i}[{self.j}]"
        inner = ",".join(map(str, self.helpers))
        return f"U{self.i}[{self.j},{{{inner}}}]"

    def __str__(self):
        inner = ",".join(map(str, self.helpers))
        return f"U{self.i}[{self.j},{{{inner}}}]"


VarId = Union[Source, Storage, Repair]


def var_sort_key(v: VarId):
    return v.sort_key()


@dataclass(frozen=True)
class Universe:
    params: DssParams
    vars: tuple
    index: dict = field(compare=False, repr=False)

    def __len__(self):
        return len(self.vars)

    @property
    def size(self) -> int:
        return len(self.vars)

    @property
    def full(self) -> int:
        """Bitmask of the whole universe."""
        return (1 << len(self.vars)) - 1

    def name(self, v: VarId) -> str:
        if isinstance(v, Repair):
            return v.render(self.params.n)
        return str(v)

    def names(self):
        return [self.name(v) for v in self.vars]

    def bit(self, v: VarId) -> int:
        return 1 << self.index[v]

    @property
    def source(self) -> int:
        return self.index[Source()]

    def storage(self, i: int) -> int:
        return self.index[Storage(i)]

    def repair_vars(self):
        return [v for v in self.vars if isinstance(v, Repair)]

    def parse_var(self, text: str) -> VarId:
        """Inverse of :meth:`name`; accepts both the short and the long repair forms."""
        text = text.strip()
        for v in self.vars:
            if self.name(v) == text or str(v) == text:
                return v
        raise KeyError(f"no variable named {text!r} in this universe")


def helper_sets(n: int, d: int, j: int):
    others = [x for x in range(1, n + 1) if x != j]
    return list(itertools.combinations(others, d))


def universe_size(n: int, d: int) -> int:
    return 1 + n + n * comb(n - 1, d) * d


def enumerate_universe(params: DssParams) -> Universe:
    """All variables of the instance: S, Y_1..Y_n, then every U_{i[j,D]}.

    Repair variables are ordered by failed node ``j``, then helper set ``D``
    (lexicographically), then helper ``i``.
    """
    n, d = params.n, params.d
    vars_: list[VarId] = [Source()]
    vars_ += [Storage(i) for i in range(1, n + 1)]
    for j in range(1, n + 1):
        for D in helper_sets(n, d, j):
            vars_ += [Repair(i, j, D) for i in D]
    vars_.sort(key=var_sort_key)
    index = {v: p for p, v in enumerate(vars_)}
    return Universe(params, tuple(vars_), index)


def max_flow_bound(params: DssParams) -> Fraction:
    """Cut-set bound: sum over i < k of min(alpha, (d - i) * beta)."""
    alpha, beta = params.require_capacities()
    return sum((min(alpha, (params.d - i) * beta) for i in range(params.k)), Fraction(0))
