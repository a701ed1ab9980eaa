"""Explicit-distribution checks of the symmetrisation argument, and code tables.

Entropies are in bits.  Probabilities are exact rationals; only the final
``-sum p log2 p`` is evaluated in floating point.

Concatenation entropies use the i.i.d.-copies identity: the concatenated
scheme runs one independent copy of the base variables per relabelling
``sigma``, so the entropy of a family of its variables is the sum over
``sigma`` of base entropies of the relabelled sets.  Nothing of size ``n!``
is ever materialised.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from .model import DssParams, Repair, Source, Storage, enumerate_universe, helper_sets
from .reduce import NodePermutation, apply_action, induced_action, symmetric_group

TOL = 1e-9


class CodeValidationError(ValueError):
    """A code table whose shapes or values do not match its declared alphabets."""


class InadmissibleCodeError(ValueError):
    """The symmetrisation checks assume a zero-error scheme."""


# -- distributions ---------------------------------------------------------------

@dataclass(frozen=True)
class JointPmf:
    """Distribution of ``len(sizes)`` discrete variables, positions ``0..n-1``.

    ``probs`` maps outcome tuples to Fractions; missing outcomes have
    probability zero.
    """

    sizes: tuple
    probs: dict = field(hash=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        probs = {}
        for outcome, p in self.probs.items():
            outcome = tuple(int(v) for v in outcome)
            p = Fraction(p)
            if len(outcome) != len(sizes):
                raise ValueError(f"outcome {outcome} does not have {len(sizes)} coordinates")
            if any(not 0 <= v < s for v, s in zip(outcome, sizes)):
                raise ValueError(f"outcome {outcome} outside alphabets {sizes}")
            if p < 0:
                raise ValueError(f"negative probability {p} at {outcome}")
            if p:
                probs[outcome] = probs.get(outcome, Fraction(0)) + p
        total = sum(probs.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self):
        return len(self.sizes)

    @classmethod
    def uniform(cls, sizes):
        outcomes = list(itertools.product(*(range(s) for s in sizes)))
        p = Fraction(1, len(outcomes))
        return cls(tuple(sizes), {o: p for o in outcomes})

    @classmethod
    def from_weights(cls, sizes, weights):
        """Normalise nonnegative integer weights listed in ``itertools.product`` order."""
        outcomes = list(itertools.product(*(range(s) for s in sizes)))
        weights = [int(w) for w in weights]
        if len(weights) != len(outcomes):
            raise ValueError(f"need {len(outcomes)} weights, got {len(weights)}")
        total = sum(weights)
        if total <= 0:
            raise ValueError("weights must have a positive sum")
        return cls(tuple(sizes), {o: Fraction(w, total) for o, w in zip(outcomes, weights) if w})

    def marginal(self, positions) -> dict:
        positions = tuple(positions)
        out: dict = {}
        for outcome, p in self.probs.items():
            key = tuple(outcome[q] for q in positions)
            out[key] = out.get(key, Fraction(0)) + p
        return out


def _positions(s) -> tuple:
    if isinstance(s, (int, np.integer)):
        s = int(s)
        return tuple(p for p in range(s.bit_length()) if s >> p & 1)
    return tuple(sorted(set(s)))


def entropy_of(probabilities) -> float:
    return -sum(float(p) * math.log2(float(p)) for p in probabilities if p > 0) + 0.0


def joint_entropy(pmf: JointPmf, s) -> float:
    """Entropy of the marginal on ``s`` (a bitmask or an iterable of 0-based positions)."""
    positions = _positions(s)
    if not positions:
        return 0.0
    if positions[-1] >= pmf.n:
        raise ValueError(f"position {positions[-1]} outside the {pmf.n} variables")
    return entropy_of(pmf.marginal(positions).values())


# -- concatenation -----------------------------------------------------------------

def _label_action(n):
    """Relabellings of base variables 1..n acting on 0-based positions."""
    return [tuple(g(i + 1) - 1 for i in range(n)) for g in symmetric_group(n)]


def concatenation_entropy(pmf: JointPmf, A, actions=None) -> float:
    """Entropy of ``(W_a, a in A)`` in the concatenated scheme.

    ``A`` is a family of subsets given as iterables of 1-based labels.
    ``actions`` lists, per group element, the image of each 0-based position;
    by default the group is every permutation of the ``n`` base labels.
    """
    actions = _label_action(pmf.n) if actions is None else actions
    union = set()
    for alpha in A:
        union |= {i - 1 for i in alpha}
    if not union:
        return 0.0
    return sum(joint_entropy(pmf, {img[p] for p in union}) for img in actions)


def apply_to_family(sigma: NodePermutation, A):
    return [sorted(sigma(i) for i in alpha) for alpha in A]


def check_proposition1(pmf: JointPmf, A, sigma: NodePermutation) -> dict:
    """Both sides of the relabelling invariance of a concatenation entropy."""
    lhs = concatenation_entropy(pmf, A)
    rhs = concatenation_entropy(pmf, apply_to_family(sigma, A))
    return {"lhs": lhs, "rhs": rhs, "equal": abs(lhs - rhs) <= TOL}


def random_pmf(rng: np.random.Generator, n=3, alphabet=2, max_weight=6, sparsity=0.3) -> JointPmf:
    """Small random integer weights, some zeroed, normalised exactly."""
    sizes = (alphabet,) * n
    count = alphabet ** n
    weights = rng.integers(1, max_weight + 1, size=count)
    weights[rng.random(count) < sparsity] = 0
    if weights.sum() == 0:
        weights[rng.integers(count)] = 1
    return JointPmf.from_weights(sizes, weights)


def random_family(rng: np.random.Generator, n=3, max_sets=3):
    size = int(rng.integers(0, max_sets + 1))
    family = []
    for _ in range(size):
        bits = int(rng.integers(1, 1 << n))
        family.append([i + 1 for i in range(n) if bits >> i & 1])
    return family


def random_permutation(rng: np.random.Generator, n=3) -> NodePermutation:
    return NodePermutation(tuple(int(v) + 1 for v in rng.permutation(n)))


def proposition1_suite(seed=42, trials=1000, n=3) -> dict:
    """Randomised relabelling-invariance checks; reports the worst discrepancy."""
    rng = np.random.default_rng(seed)
    worst, failures = 0.0, []
    for t in range(trials):
        pmf = random_pmf(rng, n)
        A = random_family(rng, n)
        sigma = random_permutation(rng, n)
        rep = check_proposition1(pmf, A, sigma)
        gap = abs(rep["lhs"] - rep["rhs"])
        worst = max(worst, gap)
        if not rep["equal"]:
            failures.append({"trial": t, "family": A, "sigma": str(sigma), "gap": gap})
    return {"trials": trials, "seed": seed, "max_gap": worst, "failures": failures,
            "passed": not failures}


# -- code tables -------------------------------------------------------------------

def _radix_index(values, sizes) -> int:
    idx = 0
    for v, s in zip(values, sizes):
        idx = idx * s + v
    return idx


@dataclass
class CodeTable:
    """An exact-repair code given by explicit lookup tables.

    ``storage[i]`` is ``(alphabet size, table over source symbols)`` for node
    ``i``.  ``repair[Repair(i, j, D)]`` is ``(alphabet size, table over the
    alphabet of Y_i)``.  Decoder tables are indexed in mixed radix over the
    inputs listed in ascending node order, first input most significant:
    ``repair_decoders[(j, D)]`` maps helper messages to a Y_j symbol and
    ``reconstruction_decoders[K]`` maps stored symbols of ``K`` to a source
    symbol.
    """

    params: DssParams
    source_size: int
    storage: dict
    repair: dict
    repair_decoders: dict
    reconstruction_decoders: dict

    def __post_init__(self):
        self.validate()

    def storage_size(self, i):
        return self.storage[i][0]

    def repair_size(self, v: Repair):
        return self.repair[v][0]

    def validate(self):
        p = self.params
        if self.source_size < 1:
            raise CodeValidationError("source alphabet must be nonempty")
        nodes = set(range(1, p.n + 1))
        if set(self.storage) != nodes:
            raise CodeValidationError(f"storage encoders needed for nodes {sorted(nodes)}")
        for i, (size, table) in self.storage.items():
            _check_table(f"storage encoder of node {i}", table, self.source_size, size)
        expected = {v for v in enumerate_universe(p).vars if isinstance(v, Repair)}
        if set(self.repair) != expected:
            missing = sorted(map(str, expected - set(self.repair)))
            extra = sorted(map(str, set(self.repair) - expected))
            raise CodeValidationError(f"repair encoders mismatch: missing {missing}, unexpected {extra}")
        for v, (size, table) in self.repair.items():
            _check_table(f"repair encoder {v}", table, self.storage_size(v.i), size)
        scenarios = {(j, D) for j in nodes for D in helper_sets(p.n, p.d, j)}
        if set(self.repair_decoders) != scenarios:
            raise CodeValidationError("repair decoders must cover every (failed node, helper set)")
        for (j, D), table in self.repair_decoders.items():
            domain = math.prod(self.repair_size(Repair(i, j, D)) for i in D)
            _check_table(f"repair decoder for node {j} from {list(D)}", table, domain,
                         self.storage_size(j))
        sets = set(itertools.combinations(sorted(nodes), p.k))
        if set(self.reconstruction_decoders) != sets:
            raise CodeValidationError(f"reconstruction decoders must cover every {p.k}-subset of nodes")
        for K, table in self.reconstruction_decoders.items():
            domain = math.prod(self.storage_size(i) for i in K)
            _check_table(f"reconstruction decoder for {list(K)}", table, domain, self.source_size)

    # -- evaluation

    def stored(self, s: int) -> dict:
        return {i: self.storage[i][1][s] for i in self.storage}

    def message(self, v: Repair, s: int) -> int:
        return self.repair[v][1][self.storage[v.i][1][s]]

    def repaired(self, j, D, s) -> int:
        D = tuple(D)
        values = [self.message(Repair(i, j, D), s) for i in D]
        sizes = [self.repair_size(Repair(i, j, D)) for i in D]
        return self.repair_decoders[(j, D)][_radix_index(values, sizes)]

    def reconstructed(self, K, s) -> int:
        K = tuple(K)
        y = self.stored(s)
        sizes = [self.storage_size(i) for i in K]
        return self.reconstruction_decoders[K][_radix_index([y[i] for i in K], sizes)]

    # -- serialisation

    def to_json(self) -> dict:
        p = self.params
        return {
            "params": p.as_dict(),
            "source_size": self.source_size,
            "storage": [{"node": i, "alphabet_size": size, "encoder": list(table)}
                        for i, (size, table) in sorted(self.storage.items())],
            "repair": [{"helper": v.i, "failed": v.j, "helpers": list(v.helpers),
                        "alphabet_size": size, "encoder": list(table)}
                       for v, (size, table) in sorted(self.repair.items(), key=lambda kv: kv[0].sort_key())],
            "repair_decoders": [{"failed": j, "helpers": list(D), "table": list(t)}
                                for (j, D), t in sorted(self.repair_decoders.items())],
            "reconstruction_decoders": [{"nodes": list(K), "table": list(t)}
                                        for K, t in sorted(self.reconstruction_decoders.items())],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CodeTable":
        try:
            pd = doc["params"]
            params = DssParams(int(pd["n"]), int(pd["k"]), int(pd["d"]),
                               pd.get("alpha"), pd.get("beta"))
            storage = {int(e["node"]): (int(e["alphabet_size"]), [int(v) for v in e["encoder"]])
                       for e in doc["storage"]}
            repair = {Repair(int(e["helper"]), int(e["failed"]), tuple(e["helpers"])):
                      (int(e["alphabet_size"]), [int(v) for v in e["encoder"]])
                      for e in doc["repair"]}
            rdec = {(int(e["failed"]), tuple(sorted(int(h) for h in e["helpers"]))):
                    [int(v) for v in e["table"]] for e in doc["repair_decoders"]}
            sdec = {tuple(sorted(int(i) for i in e["nodes"])): [int(v) for v in e["table"]]
                    for e in doc["reconstruction_decoders"]}
            return cls(params, int(doc["source_size"]), storage, repair, rdec, sdec)
        except (KeyError, TypeError) as exc:
            raise CodeValidationError(f"malformed code document: {exc!r}") from exc

    @classmethod
    def load(cls, path) -> "CodeTable":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CodeValidationError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_json(doc)

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")


def _check_table(what, table, domain, codomain):
    if codomain < 1:
        raise CodeValidationError(f"{what}: alphabet size must be positive")
    if len(table) != domain:
        raise CodeValidationError(f"{what}: expected {domain} entries, got {len(table)}")
    for v in table:
        if not 0 <= v < codomain:
            raise CodeValidationError(f"{what}: value {v} outside alphabet of size {codomain}")


def parity_code() -> CodeTable:
    """(3,2,2) code: S = (s1, s2) in {0,1}^2, Y1 = s1, Y2 = s2, Y3 = s1 xor s2, U = Y_i.

    The source symbol is ``2*s1 + s2``.
    """
    params = DssParams(3, 2, 2, 1, 1)
    sources = [(s >> 1, s & 1) for s in range(4)]
    storage = {1: (2, [a for a, _ in sources]), 2: (2, [b for _, b in sources]),
               3: (2, [a ^ b for a, b in sources])}
    repair = {v: (2, [0, 1]) for v in enumerate_universe(params).vars if isinstance(v, Repair)}
    xor = [0, 1, 1, 0]          # (u_a, u_b) -> u_a xor u_b
    rdec = {(j, D): list(xor) for j in range(1, 4) for D in helper_sets(3, 2, j)}
    sdec = {}
    for K in itertools.combinations(range(1, 4), 2):
        table = []
        for ya, yb in itertools.product(range(2), repeat=2):
            y = dict(zip(K, (ya, yb)))
            if K == (1, 2):
                s1, s2 = y[1], y[2]
            elif K == (1, 3):
                s1, s2 = y[1], y[1] ^ y[3]
            else:
                s1, s2 = y[2] ^ y[3], y[2]
            table.append(2 * s1 + s2)
        sdec[K] = table
    return CodeTable(params, 4, storage, repair, rdec, sdec)


def repetition_code(n=3, k=2, d=2, source_size=2) -> CodeTable:
    """Every node stores S and every helper forwards it.

    Capacities are declared as ``log2(source_size)`` when that is an integer
    and left unset otherwise.
    """
    power_of_two = source_size & (source_size - 1) == 0
    bits = source_size.bit_length() - 1 if power_of_two else None
    params = DssParams(n, k, d, bits, bits)
    ident = list(range(source_size))
    storage = {i: (source_size, list(ident)) for i in range(1, n + 1)}
    repair = {v: (source_size, list(ident))
              for v in enumerate_universe(params).vars if isinstance(v, Repair)}
    rdec = {}
    for j in range(1, n + 1):
        for D in helper_sets(n, d, j):
            # take the first helper's copy
            rdec[(j, D)] = [idx // source_size ** (d - 1) for idx in range(source_size ** d)]
    sdec = {K: [idx // source_size ** (k - 1) for idx in range(source_size ** k)]
            for K in itertools.combinations(range(1, n + 1), k)}
    return CodeTable(params, source_size, storage, repair, rdec, sdec)


def _fits(size: int, capacity: Fraction) -> bool:
    """``log2(size) <= capacity`` decided exactly as ``size^q <= 2^p``."""
    if size <= 1:
        return capacity >= 0
    return size ** capacity.denominator <= 2 ** capacity.numerator


def check_code(code: CodeTable) -> dict:
    """Exhaustive zero-error check, plus capacity checks when the code declares alpha and beta.

    Every source symbol is pushed through every repair scenario and every
    reconstruction set, so ``zero_error`` is exact.  ``admissible`` requires
    zero error and, if capacities are declared, alphabets within them.
    """
    p = code.params
    violations = []
    for s in range(code.source_size):
        y = code.stored(s)
        for (j, D) in sorted(code.repair_decoders):
            got = code.repaired(j, D, s)
            if got != y[j]:
                violations.append({"kind": "repair", "failed": j, "helpers": list(D),
                                   "source": s, "expected": y[j], "decoded": got})
        for K in sorted(code.reconstruction_decoders):
            got = code.reconstructed(K, s)
            if got != s:
                violations.append({"kind": "reconstruction", "nodes": list(K),
                                   "source": s, "decoded": got})
    zero_error = not violations
    if p.alpha is not None:
        for i in sorted(code.storage):
            if not _fits(code.storage_size(i), p.alpha):
                violations.append({"kind": "storage-capacity", "node": i,
                                   "alphabet_size": code.storage_size(i), "alpha": str(p.alpha)})
    if p.beta is not None:
        for v in sorted(code.repair, key=lambda v: v.sort_key()):
            if not _fits(code.repair_size(v), p.beta):
                violations.append({"kind": "repair-capacity", "variable": str(v),
                                   "alphabet_size": code.repair_size(v), "beta": str(p.beta)})
    return {
        "admissible": not violations,
        "zero_error": zero_error,
        "violations": violations,
        "rate": math.log2(code.source_size),
        "storage_bits": {i: math.log2(code.storage_size(i)) for i in sorted(code.storage)},
        "repair_bits": max((math.log2(code.repair_size(v)) for v in code.repair), default=0.0),
        "alpha": None if p.alpha is None else str(p.alpha),
        "beta": None if p.beta is None else str(p.beta),
    }


def induced_pmf(code: CodeTable) -> tuple:
    """Joint pmf of every universe variable, from a uniform source through the tables."""
    universe = enumerate_universe(code.params)
    probs: dict = {}
    p = Fraction(1, code.source_size)
    for s in range(code.source_size):
        y = code.stored(s)
        outcome = []
        for v in universe.vars:
            if isinstance(v, Source):
                outcome.append(s)
            elif isinstance(v, Storage):
                outcome.append(y[v.i])
            else:
                outcome.append(code.message(v, s))
        key = tuple(outcome)
        probs[key] = probs.get(key, Fraction(0)) + p
    sizes = []
    for v in universe.vars:
        if isinstance(v, Source):
            sizes.append(code.source_size)
        elif isinstance(v, Storage):
            sizes.append(code.storage_size(v.i))
        else:
            sizes.append(code.repair_size(v))
    return universe, JointPmf(tuple(sizes), probs)


def _parse_repair(universe, item) -> Repair:
    if isinstance(item, Repair):
        return item
    text = str(item).strip()
    if not text.startswith("U"):
        text = "U" + text
    v = universe.parse_var(text)
    if not isinstance(v, Repair):
        raise ValueError(f"{item!r} is not a repair variable")
    return v


def check_theorem4(code: CodeTable, gamma, delta, sigma: NodePermutation) -> dict:
    """Relabelling invariance of storage/repair entropies in the concatenated code.

    ``gamma`` is a set of nodes, ``delta`` a set of repair variables (``Repair``
    objects or names such as ``"1[2]"``).  Compares the concatenation entropy
    of ``(Y_gamma, U_delta)`` with that of the relabelled family.  Also
    reports the plain base-code entropies of both families, which need not
    agree, and the scaling of the concatenated code.
    """
    report = check_code(code)
    if not report["admissible"]:
        raise InadmissibleCodeError("code is not admissible; the symmetry statements assume it is")
    universe, pmf = induced_pmf(code)
    actions = [induced_action(g, universe) for g in symmetric_group(code.params.n)]
    mask = 0
    for i in gamma:
        mask |= universe.bit(Storage(int(i)))
    for item in delta:
        mask |= universe.bit(_parse_repair(universe, item))
    image = induced_action(sigma, universe)
    moved = apply_action(image, mask)

    def concat(m):
        return sum(joint_entropy(pmf, apply_action(img, m)) for img in actions) if m else 0.0

    lhs, rhs = concat(mask), concat(moved)
    copies = factorial(code.params.n)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "equal": abs(lhs - rhs) <= TOL,
        "base_lhs": joint_entropy(pmf, mask),
        "base_rhs": joint_entropy(pmf, moved),
        "copies": copies,
        "concatenated_rate": copies * report["rate"],
        "concatenated_alpha": None if code.params.alpha is None else str(copies * code.params.alpha),
        "concatenated_beta": None if code.params.beta is None else str(copies * code.params.beta),
    }
