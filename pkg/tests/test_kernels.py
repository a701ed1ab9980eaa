"""The numba kernels and their numpy fallbacks must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dssbound import _kernels as K
from dssbound.model import DssParams, enumerate_universe
from dssbound.reduce import ClosureOracle, group_images

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not available")


def rules_322():
    o = ClosureOracle.for_universe(enumerate_universe(DssParams(3, 2, 2)))
    return [r.determiners for r in o.rules], [r.determined for r in o.rules]


def test_backend_flag():
    assert K.BACKEND in ("numba", "numpy")
    assert (K.BACKEND == "numba") == K.HAVE_NUMBA


def test_numpy_closure_table_matches_fixpoint():
    det, dep = rules_322()
    o = ClosureOracle.for_universe(enumerate_universe(DssParams(3, 2, 2)))
    table = K.closure_table_np(10, det, dep)
    assert all(table[s] == o.closure(s) for s in range(0, 1024, 7))


@needs_numba
def test_closure_table_parity():
    det, dep = rules_322()
    assert np.array_equal(K.closure_table_np(10, det, dep), K.closure_table_nb(10, det, dep))


@needs_numba
def test_orbit_parity():
    u = enumerate_universe(DssParams(3, 2, 2))
    det, dep = rules_322()
    t = K.closure_table_np(10, det, dep)
    imgs = group_images(u)
    assert np.array_equal(K.orbit_min_np(t, imgs), K.orbit_min_nb(t, imgs))
    assert np.array_equal(K.permute_masks_np(t, imgs[3]), K.permute_masks_nb(t, imgs[3]))


@needs_numba
@pytest.mark.parametrize("n_bits", [1, 2, 3, 5, 8])
def test_elemental_parity(n_bits):
    a, b = K.elemental_terms_np(n_bits), K.elemental_terms_nb(n_bits)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@given(st.integers(2, 7), st.integers(0, 2 ** 32 - 1))
def test_rewrite_parity(n_bits, seed):
    rng = np.random.default_rng(seed)
    masks, coefs = K.elemental_terms_np(n_bits)
    colmap = rng.integers(0, max(2, n_bits), size=1 << n_bits)
    colmap[0] = -1
    expected = K.rewrite_rows_np(masks, coefs, colmap)
    if K.HAVE_NUMBA:
        got = K.rewrite_rows_nb(masks, coefs, colmap)
        for x, y in zip(expected, got):
            assert np.array_equal(x, y)
    cols, vals, flipped = expected
    # the rewritten row is the original row under the column map, up to sign
    for r in range(0, len(masks), max(1, len(masks) // 25)):
        orig = {}
        for m, c in zip(masks[r], coefs[r]):
            if c and colmap[m] >= 0:
                orig[colmap[m]] = orig.get(colmap[m], 0) + c
        orig = {k: v for k, v in orig.items() if v}
        new = {c: v for c, v in zip(cols[r], vals[r]) if c >= 0}
        assert set(orig) == set(new)
        if orig:
            ratio = {orig[k] / new[k] for k in orig}
            assert len(ratio) == 1 and (next(iter(ratio)) < 0) == flipped[r]


@given(st.integers(0, 2 ** 32 - 1))
def test_pivot_parity(seed):
    rng = np.random.default_rng(seed)
    T = rng.normal(size=(6, 5))
    b = rng.normal(size=6)
    d = rng.normal(size=5)
    r, e = int(rng.integers(6)), int(rng.integers(5))
    T[r, e] = 1.5
    args = [T.copy(), b.copy(), d.copy()]
    g1 = K.pivot_np(*args, r, e)
    if K.HAVE_NUMBA:
        other = [T.copy(), b.copy(), d.copy()]
        g2 = K.pivot_nb(*other, r, e)
        assert np.isclose(g1, g2)
        for x, y in zip(args, other):
            assert np.allclose(x, y)


def test_pivot_exact_objects():
    from fractions import Fraction as F
    T = np.array([[F(2), F(1)], [F(1), F(3)]], dtype=object)
    b = np.array([F(4), F(6)], dtype=object)
    d = np.array([F(1), F(1)], dtype=object)
    gain = K.pivot(T, b, d, 0, 0)
    assert gain == 2 and b[0] == 2 and b[1] == 4 and T[0, 0] == F(1, 2)


def test_env_flag_selects_numpy_path():
    env = dict(os.environ, DSSBOUND_DISABLE_NUMBA="1")
    code = ("from dssbound import _kernels as K; from dssbound.lp import build_rate_lp, solve;"
            "from dssbound.model import DssParams;"
            "print(K.BACKEND, K.closure_table is K.closure_table_np,"
            " solve(build_rate_lp(DssParams(3, 2, 2, 2, 1))).value)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out == ["numpy", "True", "3"]
