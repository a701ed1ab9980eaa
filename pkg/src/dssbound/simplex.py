"""Dense dictionary simplex with Bland's rule, in exact rationals or floats.

Solves ``max c.x`` subject to ``A x <= b`` and ``x >= 0``.  When some
``b_i < 0`` the auxiliary-variable phase one is run first: a column ``x0``
with coefficient -1 in every row is added and ``-x0`` is maximised.

Labels: original columns are ``0..n-1``, slacks are ``n..n+m-1`` and the
auxiliary variable is ``n+m``.  Bland's rule (smallest label enters, and
among tied ratios the smallest label leaves) rules out cycling, which
matters here because the entropy LPs are massively degenerate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels

FLOAT_TOL = 1e-9


class PivotLimitError(RuntimeError):
    pass


@dataclass
class SimplexResult:
    status: str                 # optimal | infeasible | unbounded
    value: object = None
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)      # duals (optimal) or Farkas multipliers (infeasible)
    ray: list = field(default_factory=list)    # improving direction (unbounded)
    pivots: int = 0


def _as_exact(a):
    out = np.empty(np.shape(a), dtype=object)
    flat = out.reshape(-1)
    for i, v in enumerate(np.asarray(a, dtype=object).reshape(-1)):
        flat[i] = Fraction(v)
    return out


class _Dictionary:
    """``x_B = b - T x_N``, ``z = z0 + d . x_N``."""

    def __init__(self, T, b, nb, bs, tol, limit):
        self.T, self.b = T, b
        self.nb = np.asarray(nb, dtype=np.int64)
        self.bs = np.asarray(bs, dtype=np.int64)
        self.tol = tol
        self.limit = limit
        self.pivots = 0

    def pivot(self, d, r, e):
        gain = _kernels.pivot(self.T, self.b, d, r, e)
        self.nb[e], self.bs[r] = self.bs[r], self.nb[e]
        self.pivots += 1
        if self.limit is not None and self.pivots > self.limit:
            raise PivotLimitError(f"more than {self.limit} pivots")
        return gain

    def iterate(self, d, z):
        """Run Bland pivots until optimal or unbounded; returns (status, z, entering column)."""
        tol = self.tol
        while True:
            cand = np.nonzero((d > tol).astype(bool))[0]
            if len(cand) == 0:
                return "optimal", z, None
            e = cand[np.argmin(self.nb[cand])]
            col = self.T[:, e]
            pos = np.nonzero((col > tol).astype(bool))[0]
            if len(pos) == 0:
                return "unbounded", z, e
            ratios = self.b[pos] / col[pos]
            lo = ratios.min()
            ties = pos[(ratios <= lo + tol).astype(bool)]
            r = ties[np.argmin(self.bs[ties])]
            z = z + self.pivot(d, r, e)

    def duals(self, d, n, m, zero):
        y = [zero] * m
        for q, lab in enumerate(self.nb):
            if n <= lab < n + m:
                y[lab - n] = -d[q]
        return y

    def primal(self, n, zero):
        x = [zero] * n
        for r, lab in enumerate(self.bs):
            if lab < n:
                x[lab] = self.b[r]
        return x


def bland_simplex(A, b, c, exact=True, tol=FLOAT_TOL, max_pivots=None) -> SimplexResult:
    """Solve ``max c.x, A x <= b, x >= 0`` with Bland's rule.

    ``exact=True`` converts all data to :class:`Fraction` and compares against
    zero exactly; otherwise float64 with absolute tolerance ``tol``.
    """
    A = np.asarray(A, dtype=object if exact else np.float64)
    m, n = A.shape if A.ndim == 2 else (0, len(c))
    if exact:
        T, bb, cc = _as_exact(A.reshape(m, n)), _as_exact(b), _as_exact(c)
        zero, one, tol = Fraction(0), Fraction(1), 0
    else:
        T = A.reshape(m, n).astype(np.float64).copy()
        bb = np.asarray(b, dtype=np.float64).copy()
        cc = np.asarray(c, dtype=np.float64)
        zero, one = 0.0, 1.0
    aux = n + m
    dic = _Dictionary(T, bb, range(n), range(n, n + m), tol, max_pivots)

    if m and (bb < -tol).astype(bool).any():
        col = np.empty((m, 1), dtype=T.dtype)
        col[:] = -one
        dic.T = np.hstack([dic.T, col])
        dic.nb = np.append(dic.nb, aux)
        d = np.empty(n + 1, dtype=T.dtype)
        d[:] = zero
        d[n] = -one
        r = int(np.argmin(bb))       # first row attaining the minimum, i.e. smallest label
        z = zero + dic.pivot(d, r, n)
        status, z, _ = dic.iterate(d, z)
        if z < -tol:
            return SimplexResult("infeasible", y=dic.duals(d, n, m, zero), pivots=dic.pivots)
        rows = np.nonzero(dic.bs == aux)[0]
        if len(rows):
            r = rows[0]
            nz = np.nonzero((abs(dic.T[r]) > tol).astype(bool))[0]
            nz = nz[dic.nb[nz] != aux]
            e = nz[np.argmin(dic.nb[nz])]
            dic.pivot(d, r, e)
        q = int(np.nonzero(dic.nb == aux)[0][0])
        dic.T = np.delete(dic.T, q, axis=1)
        dic.nb = np.delete(dic.nb, q)

    d = np.empty(n, dtype=T.dtype)
    d[:] = zero
    z = zero
    for q, lab in enumerate(dic.nb):
        if lab < n:
            d[q] = cc[lab]
    for r, lab in enumerate(dic.bs):
        if lab < n and cc[lab] != 0:
            z = z + cc[lab] * dic.b[r]
            d = d - cc[lab] * dic.T[r]
    status, z, e = dic.iterate(d, z)
    if status == "unbounded":
        ray = [zero] * n
        if dic.nb[e] < n:
            ray[dic.nb[e]] = one
        for r, lab in enumerate(dic.bs):
            if lab < n:
                ray[lab] = -dic.T[r, e]
        return SimplexResult("unbounded", ray=ray, pivots=dic.pivots)
    return SimplexResult("optimal", z, dic.primal(n, zero), dic.duals(d, n, m, zero),
                         pivots=dic.pivots)
