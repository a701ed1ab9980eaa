import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import entropy as scipy_entropy

from dssbound.lp import build_rate_lp, solve
from dssbound.model import DssParams, Repair, helper_sets
from dssbound.reduce import NodePermutation, symmetric_group
from dssbound.verify import (CodeTable, CodeValidationError, InadmissibleCodeError, JointPmf,
                             check_code, check_proposition1, check_theorem4, concatenation_entropy,
                             induced_pmf, joint_entropy, parity_code, proposition1_suite,
                             repetition_code)


def asymmetric_code():
    """Y1 = s1, Y2 = s2, Y3 = (s1, s2); node 3 stores twice as much as the others."""
    params = DssParams(3, 2, 2, 2, 1)
    src = [(s >> 1, s & 1) for s in range(4)]
    storage = {1: (2, [a for a, _ in src]), 2: (2, [b for _, b in src]), 3: (4, list(range(4)))}
    repair = {
        Repair(1, 3, (1, 2)): (2, [0, 1]), Repair(2, 3, (1, 2)): (2, [0, 1]),
        Repair(3, 1, (2, 3)): (2, [0, 0, 1, 1]), Repair(2, 1, (2, 3)): (1, [0, 0]),
        Repair(3, 2, (1, 3)): (2, [0, 1, 0, 1]), Repair(1, 2, (1, 3)): (1, [0, 0]),
    }
    rdec = {(3, (1, 2)): [0, 1, 2, 3], (1, (2, 3)): [0, 1], (2, (1, 3)): [0, 1]}
    sdec = {(1, 2): [0, 1, 2, 3], (1, 3): [0, 1, 2, 3] * 2, (2, 3): [0, 1, 2, 3] * 2}
    return CodeTable(params, 4, storage, repair, rdec, sdec)


def pmfs(n=3, alphabet=2):
    count = alphabet ** n
    weights = st.lists(st.integers(0, 5), min_size=count, max_size=count).filter(any)
    return weights.map(lambda w: JointPmf.from_weights((alphabet,) * n, w))


subsets = st.sets(st.integers(0, 2))


# -- entropy ------------------------------------------------------------------------------

def test_uniform_entropy():
    pmf = JointPmf.uniform((2, 3, 4))
    assert joint_entropy(pmf, [0, 1, 2]) == pytest.approx(math.log2(24), abs=1e-12)
    assert joint_entropy(pmf, 0b010) == pytest.approx(math.log2(3), abs=1e-12)
    assert joint_entropy(pmf, []) == 0.0


@given(pmfs(), subsets)
def test_entropy_matches_scipy(pmf, s):
    marg = pmf.marginal(sorted(s))
    want = scipy_entropy([float(p) for p in marg.values()], base=2) if s else 0.0
    assert joint_entropy(pmf, s) == pytest.approx(want, abs=1e-9)


@given(pmfs(), subsets, subsets)
def test_entropy_monotone_and_submodular(pmf, a, b):
    h = lambda s: joint_entropy(pmf, s)
    assert h(a | b) >= h(a) - 1e-9
    assert h(a) + h(b) >= h(a | b) + h(a & b) - 1e-9


def test_pmf_validation():
    with pytest.raises(ValueError):
        JointPmf((2,), {(0,): Fraction(1, 2)})
    with pytest.raises(ValueError):
        JointPmf((2,), {(2,): 1})
    with pytest.raises(ValueError):
        JointPmf((2,), {(0,): Fraction(3, 2), (1,): Fraction(-1, 2)})
    with pytest.raises(ValueError):
        JointPmf.from_weights((2,), [0, 0])


# -- relabelling invariance ---------------------------------------------------------------

def test_concatenation_is_sum_over_relabellings():
    pmf = JointPmf.from_weights((2, 2, 2), [3, 0, 1, 2, 0, 1, 1, 0])
    direct = sum(joint_entropy(pmf, {g(1) - 1, g(2) - 1}) for g in symmetric_group(3))
    assert concatenation_entropy(pmf, [[1], [2]]) == pytest.approx(direct, abs=1e-12)
    assert concatenation_entropy(pmf, []) == 0.0


@given(pmfs(), st.lists(st.sets(st.integers(1, 3), min_size=1), max_size=3),
       st.permutations([1, 2, 3]))
def test_relabelling_invariance(pmf, family, perm):
    rep = check_proposition1(pmf, family, NodePermutation(tuple(perm)))
    assert rep["equal"], rep


def test_plain_entropy_not_invariant():
    # the concatenation is what makes the relabelling harmless
    pmf = JointPmf.from_weights((2, 2, 2), [1, 0, 0, 0, 0, 0, 1, 0])  # X1 = X2, X3 constant
    assert joint_entropy(pmf, [0]) != joint_entropy(pmf, [2])


def test_suite_seeded():
    rep = proposition1_suite(seed=7, trials=200)
    assert rep["passed"] and rep["max_gap"] <= 1e-9
    assert rep == proposition1_suite(seed=7, trials=200)


# -- codes ------------------------------------------------------------------------------

def test_parity_code_admissible():
    rep = check_code(parity_code())
    assert rep["admissible"] and rep["zero_error"] and rep["rate"] == 2.0
    assert rep["storage_bits"] == {1: 1.0, 2: 1.0, 3: 1.0}


def test_parity_code_exhaustive_oracle():
    """Decode every scenario by hand from the xor relation, independently of the tables."""
    code = parity_code()
    for s in range(4):
        s1, s2 = s >> 1, s & 1
        assert code.stored(s) == {1: s1, 2: s2, 3: s1 ^ s2}
        for K in itertools.combinations((1, 2, 3), 2):
            assert code.reconstructed(K, s) == s
        for j in (1, 2, 3):
            for D in helper_sets(3, 2, j):
                assert code.repaired(j, D, s) == code.stored(s)[j]


def test_packaged_fixture_matches_builder():
    from importlib.resources import files
    doc = json.loads(files("dssbound").joinpath("data/parity_322.json").read_text())
    assert CodeTable.from_json(doc).to_json() == parity_code().to_json()


def test_faulty_fixture_rejected(fixtures_dir):
    rep = check_code(CodeTable.load(fixtures_dir / "parity_322_faulty.json"))
    assert not rep["admissible"] and not rep["zero_error"]
    assert rep["violations"] == [{"kind": "reconstruction", "nodes": [1, 3],
                                  "source": 3, "decoded": 2}]
    with pytest.raises(InadmissibleCodeError):
        check_theorem4(CodeTable.load(fixtures_dir / "parity_322_faulty.json"),
                       [1], [], NodePermutation.identity(3))


def test_capacity_violation():
    code = parity_code()
    code.params = DssParams(3, 2, 2, Fraction(1, 2), 1)
    rep = check_code(code)
    assert rep["zero_error"] and not rep["admissible"]
    assert {v["kind"] for v in rep["violations"]} == {"storage-capacity"}


def test_fractional_capacity_exact():
    # log2(3) = 1.58..., fits 8/5 but not 3/2
    code = repetition_code(3, 2, 2, source_size=3)
    code.params = DssParams(3, 2, 2, Fraction(8, 5), Fraction(8, 5))
    assert check_code(code)["admissible"]
    code.params = DssParams(3, 2, 2, Fraction(3, 2), Fraction(8, 5))
    assert not check_code(code)["admissible"]


def test_repetition_code():
    code = repetition_code(4, 2, 3, source_size=4)
    rep = check_code(code)
    assert rep["admissible"] and rep["rate"] == 2.0
    assert repetition_code(source_size=3).params.alpha is None


def test_json_roundtrip(tmp_path):
    code = asymmetric_code()
    path = tmp_path / "code.json"
    code.dump(path)
    assert CodeTable.load(path).to_json() == code.to_json()


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d["storage"].pop(), "storage encoders"),
    (lambda d: d["storage"][0]["encoder"].append(0), "expected 4 entries"),
    (lambda d: d["storage"][0].__setitem__("encoder", [0, 1, 2, 0]), "outside alphabet"),
    (lambda d: d["repair"].pop(), "repair encoders mismatch"),
    (lambda d: d["repair_decoders"].pop(), "repair decoders"),
    (lambda d: d["reconstruction_decoders"].pop(), "reconstruction decoders"),
    (lambda d: d.pop("params"), "malformed"),
])
def test_validation_errors(mutate, message):
    doc = parity_code().to_json()
    mutate(doc)
    with pytest.raises(CodeValidationError, match=message):
        CodeTable.from_json(doc)


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(CodeValidationError):
        CodeTable.load(path)


@pytest.mark.parametrize("code, alpha_beta", [
    (parity_code(), (1, 1)), (asymmetric_code(), (2, 1)), (repetition_code(), (1, 1))])
def test_achievable_rate_below_lp_bound(code, alpha_beta):
    assert check_code(code)["admissible"]
    bound = solve(build_rate_lp(DssParams(3, 2, 2, *alpha_beta))).value
    assert check_code(code)["rate"] <= bound


# -- symmetrisation --------------------------------------------------------------------

def test_induced_pmf_marginals():
    universe, pmf = induced_pmf(parity_code())
    assert pmf.n == universe.size
    assert joint_entropy(pmf, 1) == pytest.approx(2.0)
    assert joint_entropy(pmf, (1 << universe.size) - 1) == pytest.approx(2.0)


def test_asymmetric_base_entropies_differ_but_concatenation_agrees():
    code = asymmetric_code()
    sigma = NodePermutation.from_cycles(3, "(1 3)")
    rep = check_theorem4(code, [1], [], sigma)
    assert rep["base_lhs"] == pytest.approx(1.0) and rep["base_rhs"] == pytest.approx(2.0)
    assert rep["equal"] and rep["lhs"] == pytest.approx(8.0)
    assert rep["copies"] == 6 and rep["concatenated_rate"] == 12.0
    assert rep["concatenated_alpha"] == "12" and rep["concatenated_beta"] == "6"


@pytest.mark.parametrize("gamma, delta", [([1], []), ([], ["3[1]"]), ([1, 2], ["1[3]", "3[2]"]),
                                          ([3], ["U2[3]"])])
def test_symmetrised_entropy_all_relabellings(gamma, delta):
    code = asymmetric_code()
    results = [check_theorem4(code, gamma, delta, g) for g in symmetric_group(3)]
    assert all(r["equal"] for r in results)
    assert len({round(r["lhs"], 9) for r in results}) == 1


# -- worked examples ----------------------------------------------------------------------

def test_entropy_examples():
    assert joint_entropy(JointPmf.uniform((2, 2)), [0, 1]) == pytest.approx(2.0, abs=1e-12)
    copy = JointPmf((2, 2), {(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)})
    assert joint_entropy(copy, [0, 1]) == pytest.approx(1.0, abs=1e-12)
    three = JointPmf((2, 2), {(0, 0): Fraction(1, 3), (0, 1): Fraction(1, 3), (1, 0): Fraction(1, 3)})
    h = -(1 / 3) * math.log2(1 / 3) - (2 / 3) * math.log2(2 / 3)
    assert joint_entropy(three, [0]) == pytest.approx(h, abs=1e-12)
    assert joint_entropy(three, [0]) == pytest.approx(0.9183, abs=1e-4)


def test_concatenation_examples():
    pmf = JointPmf.from_weights((2, 2), [3, 1, 0, 2])
    assert concatenation_entropy(pmf, [[1]]) == pytest.approx(
        joint_entropy(pmf, [0]) + joint_entropy(pmf, [1]), abs=1e-12)
    assert concatenation_entropy(JointPmf.uniform((2, 2, 2)), [[1], [2]]) == pytest.approx(12.0)


def test_identity_relabelling_exact():
    pmf = JointPmf.from_weights((2, 2, 2), [5, 0, 1, 2, 0, 3, 1, 4])
    rep = check_proposition1(pmf, [[1, 2], [3]], NodePermutation.identity(3))
    assert rep["lhs"] == rep["rhs"]


def test_adversarial_asymmetric_pmf():
    # X1 = 0 always, X2 uniform, X3 = X2 with probability 3/4
    probs = {(0, 0, 0): Fraction(3, 8), (0, 0, 1): Fraction(1, 8),
             (0, 1, 1): Fraction(3, 8), (0, 1, 0): Fraction(1, 8)}
    pmf = JointPmf((2, 2, 2), probs)
    for perm in itertools.permutations([1, 2, 3]):
        for family in ([[1]], [[1], [2]], [[2, 3]], [[1, 3], [2]]):
            assert check_proposition1(pmf, family, NodePermutation(perm))["equal"]


@pytest.mark.parametrize("gamma, delta, cycles", [([1], [], "(1 2)"), ([], ["1[2]"], "(1 3)"),
                                                  ([1, 3], ["2[1]"], "")])
def test_symmetrised_entropy_parity_examples(gamma, delta, cycles):
    sigma = NodePermutation.from_cycles(3, cycles) if cycles else NodePermutation.identity(3)
    rep = check_theorem4(parity_code(), gamma, delta, sigma)
    assert rep["equal"]
    if not cycles:
        assert rep["lhs"] == rep["rhs"]
