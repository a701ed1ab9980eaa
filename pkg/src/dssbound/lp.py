"""Rate and tradeoff linear programs over entropy columns, with certified solutions.

Two builders share one constraint system:

``build_rate_lp``
    maximise H(S) with the capacities fixed;
``build_tradeoff_lp``
    fix the rate and one capacity, minimise the other.

``mode="reduced"`` uses one column per closure/relabelling orbit.
``mode="unreduced"`` keeps all ``2^N - 1`` subsets and every equality
explicitly, and is the independent oracle for the reduced program.

:func:`solve` returns an :class:`LpSolution` whose certificate can be
checked with :func:`verify_certificate`.  In exact mode a solution is only
returned after that check passes.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm

import numpy as np

from . import simplex
from .constraints import system_constraints
from .entset import (ALPHA, BETA, EQ, GE, LE, LinearConstraint, column_name, deduplicate,
                     elemental_arrays)
from .model import DssParams, ParameterError, enumerate_universe
from .reduce import reduction_maps, rewrite_arrays, rewrite_constraints

log = logging.getLogger(__name__)

# dense simplex is used up to this many tableau entries under engine="auto"
SIMPLEX_ENTRIES = 200_000
RECONSTRUCT_DENOMINATORS = (1, 12, 60, 840, 27720, 10 ** 6)


@dataclass(frozen=True)
class Column:
    kind: str           # "entropy" | "alpha" | "beta"
    mask: int = 0

    def name(self, universe) -> str:
        if self.kind == "entropy":
            return column_name(universe, self.mask)
        return self.kind


@dataclass
class LinProgram:
    """``sense`` the objective over nonnegative columns subject to ``constraints``.

    Constraint coefficients are keyed by column index.  Every column has
    lower bound 0 (``bounds``) and no upper bound.
    """

    columns: list
    constraints: list
    objective: tuple
    sense: str = "maximize"
    universe: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sense not in ("maximize", "minimize"):
            raise ValueError(f"unknown sense {self.sense!r}")
        ncol = len(self.columns)
        for con in self.constraints:
            for c in con.columns:
                if not 0 <= c < ncol:
                    raise ValueError(f"constraint references column {c} of {ncol}")
        for c, _ in self.objective:
            if not 0 <= c < ncol:
                raise ValueError(f"objective references column {c} of {ncol}")
        self.bounds = [(Fraction(0), None)] * ncol

    @property
    def shape(self):
        return len(self.constraints), len(self.columns)

    def column_names(self) -> list[str]:
        if self.universe is None:
            given = self.meta.get("names")
            return list(given) if given else [f"x{i + 1}" for i in range(len(self.columns))]
        return [col.name(self.universe) for col in self.columns]

    def dims(self) -> dict:
        return {
            "columns": len(self.columns),
            "entropy_columns": sum(c.kind == "entropy" for c in self.columns),
            "constraints": len(self.constraints),
        }

    def objective_value(self, x):
        return sum((v * x[c] for c, v in self.objective), Fraction(0))


@dataclass
class LpSolution:
    """Solver outcome.

    ``certificate`` holds one multiplier per constraint in the maximisation
    form of the problem (the objective times +1 or -1 according to
    ``sense``).  ``certificate_kind`` is ``"dual"`` when optimal, ``"farkas"``
    when infeasible and ``"ray"`` when unbounded; a ray has one entry per
    column instead.
    """

    status: str
    value: object = None
    primal: list = field(default_factory=list)
    certificate: list = field(default_factory=list)
    certificate_kind: str = ""
    arithmetic: str = "exact"
    engine: str = "simplex"
    pivots: int = 0

    @property
    def optimal(self):
        return self.status == "optimal"


class SolverError(RuntimeError):
    pass


# -- building ----------------------------------------------------------------

def _elemental_rows(n_vars, colmap) -> list[LinearConstraint]:
    masks, coefs = elemental_arrays(n_vars)
    cols, vals, le = rewrite_arrays(masks, coefs, colmap)
    out = []
    for crow, vrow, flip in zip(cols.tolist(), vals.tolist(), le.tolist()):
        coeffs = tuple((c, Fraction(v)) for c, v in zip(crow, vrow) if c >= 0)
        out.append(LinearConstraint(coeffs, LE if flip else GE, Fraction(0), "elemental"))
    return out


def _assemble(params: DssParams, mode: str, alpha, beta, extra_params=(), all_k=False):
    """Columns, constraint list and the H(S) column index for an instance."""
    universe = enumerate_universe(params)
    system = system_constraints(universe, alpha, beta, all_k)
    if mode == "reduced":
        maps = reduction_maps(universe)
        masks = maps.columns
        colmap = maps.colmap
        system = rewrite_constraints(system, maps.table)
        source_mask = maps.table[1 << universe.source]
    elif mode == "unreduced":
        masks = list(range(1, 1 << universe.size))
        colmap = np.arange(1 << universe.size, dtype=np.int64) - 1
        source_mask = 1 << universe.source
    else:
        raise ValueError(f"mode must be 'reduced' or 'unreduced', got {mode!r}")
    columns = [Column("entropy", int(m)) for m in masks]
    index = {int(m): i for i, m in enumerate(masks)}
    for kind, key in extra_params:
        index[key] = len(columns)
        columns.append(Column(kind))
    rows = _elemental_rows(universe.size, colmap)
    rows += deduplicate(con.remap(index.__getitem__) for con in system)
    return universe, columns, rows, index[source_mask]


def build_rate_lp(params: DssParams, mode="reduced", all_reconstruction_sets=False) -> LinProgram:
    """Maximise H(S) for fixed capacities.

    ``all_reconstruction_sets`` adds reconstruction rows for every node set
    of size at least k instead of exactly k (a cross-check; same optimum).
    """
    alpha, beta = params.require_capacities()
    universe, columns, rows, src = _assemble(params, mode, alpha, beta, (),
                                             all_reconstruction_sets)
    meta = {"kind": "rate", "mode": mode, "params": params.as_dict()}
    return LinProgram(columns, rows, ((src, Fraction(1)),), "maximize", universe, meta)


def build_tradeoff_lp(params: DssParams, free="beta", rate=1, mode="reduced") -> LinProgram:
    """Minimise the free capacity subject to H(S) >= rate.

    The other capacity is taken from ``params`` and must be set.
    """
    rate = Fraction(rate)
    if free == "alpha":
        if params.beta is None:
            raise ParameterError("beta must be fixed when alpha is free")
        alpha, beta, extra = None, params.beta, [("alpha", ALPHA)]
    elif free == "beta":
        if params.alpha is None:
            raise ParameterError("alpha must be fixed when beta is free")
        alpha, beta, extra = params.alpha, None, [("beta", BETA)]
    else:
        raise ParameterError(f"free parameter must be 'alpha' or 'beta', got {free!r}")
    universe, columns, rows, src = _assemble(params, mode, alpha, beta, extra)
    rows.append(LinearConstraint.build([(src, 1)], GE, rate, "rate"))
    target = len(columns) - 1
    meta = {"kind": "tradeoff", "mode": mode, "free": free, "rate": str(rate),
            "params": params.as_dict()}
    return LinProgram(columns, rows, ((target, Fraction(1)),), "minimize", universe, meta)


# -- standard form -------------------------------------------------------------

def _standard_rows(lp: LinProgram):
    """Rows of ``A x <= b`` and, per row, (constraint index, sign)."""
    rows, rhs, origin = [], [], []
    for i, con in enumerate(lp.constraints):
        signs = {LE: (1,), GE: (-1,), EQ: (1, -1)}[con.relation]
        for s in signs:
            rows.append([(c, s * v) for c, v in con.coeffs])
            rhs.append(s * con.rhs)
            origin.append((i, s))
    return rows, rhs, origin


def _objective_vector(lp: LinProgram):
    s = 1 if lp.sense == "maximize" else -1
    c = [Fraction(0)] * len(lp.columns)
    for j, v in lp.objective:
        c[j] += s * v
    return c, s


def _dense(rows, ncol, dtype):
    A = np.zeros((len(rows), ncol), dtype=dtype)
    if dtype == object:
        A[:] = Fraction(0)
    for r, row in enumerate(rows):
        for c, v in row:
            A[r, c] = v if dtype == object else float(v)
    return A


def _fold_multipliers(y_std, origin, m, zero):
    y = [zero] * m
    for (i, s), v in zip(origin, y_std):
        y[i] = y[i] + s * v
    return y


# -- certificates --------------------------------------------------------------

def verify_certificate(lp: LinProgram, sol: LpSolution, tol=0) -> bool:
    """Check a solution and its certificate.

    ``tol=0`` demands exact rational agreement (the default for exact
    solutions); float solutions should be checked with a small ``tol``.
    """
    c, s = _objective_vector(lp)
    ncol = len(lp.columns)
    cons = lp.constraints
    if sol.status == "optimal":
        x = sol.primal
        if len(x) != ncol or any(v < -tol for v in x):
            return False
        if not all(con.holds(x.__getitem__, tol) for con in cons):
            return False
        y = sol.certificate
        if len(y) != len(cons) or not _dual_signs_ok(cons, y, tol):
            return False
        aty = _transpose_combination(cons, y, ncol)
        if any(aty[j] < c[j] - tol for j in range(ncol)):
            return False
        primal_value = sum((c[j] * x[j] for j in range(ncol)), Fraction(0) if tol == 0 else 0.0)
        dual_value = sum((yi * con.rhs for yi, con in zip(y, cons)), Fraction(0) if tol == 0 else 0.0)
        return (abs(primal_value - dual_value) <= tol
                and abs(s * sol.value - primal_value) <= tol)
    if sol.status == "infeasible":
        y = sol.certificate
        if len(y) != len(cons) or not _dual_signs_ok(cons, y, tol):
            return False
        aty = _transpose_combination(cons, y, ncol)
        return all(v >= -tol for v in aty) and sum(yi * con.rhs for yi, con in zip(y, cons)) < -tol
    if sol.status == "unbounded":
        ray = sol.certificate
        if len(ray) != ncol or any(v < -tol for v in ray):
            return False
        for con in cons:
            lhs = con.evaluate(ray.__getitem__)
            ok = {LE: lhs <= tol, GE: lhs >= -tol, EQ: abs(lhs) <= tol}[con.relation]
            if not ok:
                return False
        return sum(c[j] * ray[j] for j in range(ncol)) > tol
    return False


def _dual_signs_ok(cons, y, tol):
    for con, v in zip(cons, y):
        if con.relation == LE and v < -tol:
            return False
        if con.relation == GE and v > tol:
            return False
    return True


def _transpose_combination(cons, y, ncol):
    aty = [Fraction(0)] * ncol
    for con, yi in zip(cons, y):
        if yi == 0:
            continue
        for col, v in con.coeffs:
            aty[col] += yi * v
    return aty


# -- solving -------------------------------------------------------------------

def solve(lp: LinProgram, arithmetic="exact", engine="auto", max_pivots=None) -> LpSolution:
    """Solve ``lp``.

    ``engine="simplex"`` runs the dense Bland simplex in the requested
    arithmetic.  ``engine="highs"`` uses the HiGHS dual simplex; in exact
    mode its floating-point answer is only a candidate, rounded to nearby
    rationals and accepted after exact primal and dual checks (falling back
    to the exact simplex otherwise).  ``engine="auto"`` picks the dense
    simplex for small programs and HiGHS for large ones.
    """
    if arithmetic not in ("exact", "float"):
        raise ValueError(f"arithmetic must be 'exact' or 'float', got {arithmetic!r}")
    if engine == "auto":
        m, n = lp.shape
        engine = "simplex" if m * n <= SIMPLEX_ENTRIES else "highs"
    if engine == "simplex":
        return _solve_simplex(lp, arithmetic == "exact", max_pivots)
    if engine == "highs":
        cand = _solve_highs(lp)
        if arithmetic == "float":
            return cand
        certified = _certify(lp, cand)
        if certified is not None:
            return certified
        log.warning("could not certify the HiGHS candidate; falling back to the exact simplex")
        return _solve_simplex(lp, True, max_pivots)
    raise ValueError(f"unknown engine {engine!r}")


def _solve_simplex(lp: LinProgram, exact: bool, max_pivots) -> LpSolution:
    rows, rhs, origin = _standard_rows(lp)
    c, s = _objective_vector(lp)
    ncol, m = len(lp.columns), len(lp.constraints)
    A = _dense(rows, ncol, object if exact else np.float64)
    b = rhs if exact else [float(v) for v in rhs]
    cc = c if exact else [float(v) for v in c]
    res = simplex.bland_simplex(A.reshape(len(rows), ncol), b, cc, exact=exact,
                                max_pivots=max_pivots)
    zero = Fraction(0) if exact else 0.0
    conv = (lambda v: v) if exact else float
    arith = "exact" if exact else "float"
    if res.status == "optimal":
        y = _fold_multipliers([conv(v) for v in res.y], origin, m, zero)
        return LpSolution("optimal", s * conv(res.value), [conv(v) for v in res.x], y, "dual",
                          arith, "simplex", res.pivots)
    if res.status == "infeasible":
        y = _fold_multipliers([conv(v) for v in res.y], origin, m, zero)
        return LpSolution("infeasible", None, [], y, "farkas", arith, "simplex", res.pivots)
    return LpSolution("unbounded", None, [], [conv(v) for v in res.ray], "ray", arith, "simplex",
                      res.pivots)


def _solve_highs(lp: LinProgram) -> LpSolution:
    from scipy.optimize import linprog
    from scipy.sparse import csr_matrix

    c, s = _objective_vector(lp)
    ncol = len(lp.columns)
    ub, ub_rhs, ub_idx, eq, eq_rhs, eq_idx = [], [], [], [], [], []
    for i, con in enumerate(lp.constraints):
        if con.relation == EQ:
            eq.append(con), eq_rhs.append(float(con.rhs)), eq_idx.append(i)
        else:
            ub.append(con), ub_rhs.append(float(con.rhs if con.relation == LE else -con.rhs))
            ub_idx.append(i)

    def matrix(cons, flip):
        data, ri, ci = [], [], []
        for r, con in enumerate(cons):
            sign = -1.0 if flip and con.relation == GE else 1.0
            for col, v in con.coeffs:
                data.append(sign * float(v)), ri.append(r), ci.append(col)
        return csr_matrix((data, (ri, ci)), shape=(len(cons), ncol))

    kwargs = {}
    if ub:
        kwargs.update(A_ub=matrix(ub, True), b_ub=ub_rhs)
    if eq:
        kwargs.update(A_eq=matrix(eq, False), b_eq=eq_rhs)
    res = linprog([-float(v) for v in c], bounds=(0, None), method="highs-ds", **kwargs)
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status)
    if status is None:
        raise SolverError(f"HiGHS failed: {res.message}")
    if status != "optimal":
        return LpSolution(status, arithmetic="float", engine="highs", pivots=int(res.nit))
    y = [0.0] * len(lp.constraints)
    if ub:
        for i, v, con in zip(ub_idx, res.ineqlin.marginals, ub):
            y[i] = -float(v) * (-1.0 if con.relation == GE else 1.0)
    if eq:
        for i, v in zip(eq_idx, res.eqlin.marginals):
            y[i] = -float(v)
    return LpSolution("optimal", s * -float(res.fun), [float(v) for v in res.x], y, "dual",
                      "float", "highs", int(res.nit))


def _round(v: float, limit: int) -> Fraction:
    if abs(v) < 1e-9:
        return Fraction(0)
    return Fraction(v).limit_denominator(limit)


def _certify(lp: LinProgram, cand: LpSolution):
    """Round a float candidate to rationals and keep it only if it checks out exactly."""
    if cand.status != "optimal":
        return None
    c, s = _objective_vector(lp)
    for limit in RECONSTRUCT_DENOMINATORS:
        x = [max(_round(v, limit), Fraction(0)) for v in cand.primal]
        y = [_round(v, limit) for v in cand.certificate]
        value = s * sum((c[j] * x[j] for j in range(len(x))), Fraction(0))
        sol = LpSolution("optimal", value, x, y, "dual", "exact", "highs", cand.pivots)
        if verify_certificate(lp, sol):
            return sol
    return None


# -- reports ---------------------------------------------------------------------

def rational_record(v) -> dict:
    """``{"fraction": "p/q", "decimal": "..."}`` with 12 significant digits."""
    if v is None:
        return None
    if isinstance(v, Fraction):
        return {"fraction": str(v), "decimal": format(float(v), ".12g")}
    return {"fraction": None, "decimal": format(float(v), ".12g")}


def solution_report(lp: LinProgram, sol: LpSolution) -> dict:
    return {
        "status": sol.status,
        "value": rational_record(sol.value),
        "mode": lp.meta.get("mode"),
        "arithmetic": sol.arithmetic,
        "engine": sol.engine,
        "params": lp.meta.get("params"),
        "dims": lp.dims(),
    }


# -- LP text format ------------------------------------------------------------------

_NAME_OK = re.compile(r"^[A-Za-z!\"#$%&()/,.;?@_`'{}|~][A-Za-z0-9!\"#$%&()/,.;?@_`'{}|~]*$")


def lp_names(lp: LinProgram) -> list[str]:
    """Column names legal in the LP text format.

    Square brackets are not allowed there, so ``U1[2]`` is written ``U1(2)``.
    Names longer than 255 characters fall back to ``x<index>``.
    """
    out = []
    for i, name in enumerate(lp.column_names()):
        name = name.replace("[", "(").replace("]", ")")
        if len(name) > 255 or not _NAME_OK.match(name):
            name = f"x{i + 1}"
        out.append(name)
    if len(set(out)) != len(out):
        out = [f"x{i + 1}" for i in range(len(out))]
    return out


def _integer_row(coeffs, rhs):
    scale = lcm(*(Fraction(v).denominator for _, v in coeffs), Fraction(rhs).denominator)
    ints = [(c, int(v * scale)) for c, v in coeffs]
    r = Fraction(rhs) * scale
    g = gcd(*(v for _, v in ints), int(r))
    g = g or 1
    return [(c, v // g) for c, v in ints], int(r) // g


def _terms(pairs, names):
    parts = []
    for c, v in pairs:
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {abs(v)} {names[c]}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def export_lp(lp: LinProgram, destination=None) -> str:
    """Write ``lp`` in CPLEX LP text format; returns the text.

    Constraint rows are scaled to integer coefficients.  Objective
    coefficients are written exactly when integral and with 17 significant
    digits otherwise.  ``destination`` may be a path or a writable stream.
    """
    names = lp_names(lp)
    lines = [f"\\ {lp.meta.get('kind', 'lp')} program, mode={lp.meta.get('mode')}"]
    lines.append("Maximize" if lp.sense == "maximize" else "Minimize")
    obj = []
    for c, v in lp.objective:
        v = Fraction(v)
        num = str(v.numerator) if v.denominator == 1 else format(float(v), ".17g")
        obj.append(f"{'-' if v < 0 else '+'} {num.lstrip('-')} {names[c]}")
    body = " ".join(obj)
    if body.startswith("+ "):
        body = body[2:]
    if not body and names:
        body = f"0 {names[0]}"
    lines.append(" obj: " + body)
    lines.append("Subject To")
    for i, con in enumerate(lp.constraints):
        pairs, rhs = _integer_row(con.coeffs, con.rhs)
        rel = {LE: "<=", GE: ">=", EQ: "="}[con.relation]
        lines.append(f" c{i + 1}: {_terms(pairs, names)} {rel} {rhs}")
    lines.append("Bounds")
    for name in names:
        lines.append(f" {name} >= 0")
    lines.append("End")
    text = "\n".join(lines) + "\n"
    if destination is not None:
        if hasattr(destination, "write"):
            destination.write(text)
        else:
            with open(destination, "w") as fh:
                fh.write(text)
    return text


_TERM = re.compile(r"([+-])\s*(\S+)\s+(\S+)")


def read_lp(text: str) -> LinProgram:
    """Parse the subset of the LP format written by :func:`export_lp`.

    Column order follows the Bounds section; names are kept in ``meta``.
    """
    sections = {"obj": [], "st": [], "bounds": []}
    section, sense = None, "maximize"
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("maximize", "minimize"):
            section, sense = "obj", low
        elif low == "subject to":
            section = "st"
        elif low == "bounds":
            section = "bounds"
        elif low == "end":
            break
        elif section is not None:
            sections[section].append(line)

    names, index = [], {}

    def col(name):
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    def parse_terms(expr):
        expr = expr.strip()
        if expr and expr[0] not in "+-":
            expr = "+ " + expr
        return [(col(n), Fraction(sg + v)) for sg, v, n in _TERM.findall(expr)]

    for line in sections["bounds"]:
        col(line.split()[0])
    objective = parse_terms(" ".join(line.split(":", 1)[1] for line in sections["obj"]))
    cons = []
    for line in sections["st"]:
        expr = line.split(":", 1)[1]
        lhs, rel, rhs = re.match(r"(.*?)(<=|>=|=)\s*(\S+)$", expr.strip()).groups()
        cons.append(LinearConstraint.build(parse_terms(lhs), rel, Fraction(rhs)))
    objective = tuple((c, v) for c, v in objective if v != 0)
    columns = [Column("entropy", i + 1) for i in range(len(names))]
    return LinProgram(columns, cons, objective, sense, None, {"names": names})
