"""Hot loops over subset tables and simplex tableaux.

Every kernel exists twice: a numba ``@njit`` version and a vectorised numpy
version with identical results.  The numba path is used unless numba is
missing or ``DSSBOUND_DISABLE_NUMBA=1`` is set in the environment; the choice
is made once, at import time, and recorded in :data:`BACKEND`.

Subset tables are int64 arrays indexed by bitmask, so they are limited to
universes of at most :data:`MAX_TABLE_BITS` variables.
"""
import os

import numpy as np

MAX_TABLE_BITS = 26

_disabled = os.environ.get("DSSBOUND_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError("numba disabled by DSSBOUND_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy implementations

def closure_table_np(n_bits, det, dep):
    table = np.arange(1 << n_bits, dtype=np.int64)
    det = np.asarray(det, dtype=np.int64)
    dep = np.asarray(dep, dtype=np.int64)
    while True:
        before = table.copy()
        for a, b in zip(det, dep):
            hit = (table & a) == a
            table[hit] |= b
        if np.array_equal(before, table):
            return table


def permute_masks_np(masks, image):
    masks = np.asarray(masks, dtype=np.int64)
    out = np.zeros_like(masks)
    for p, q in enumerate(image):
        out |= ((masks >> p) & 1) << int(q)
    return out


def orbit_min_np(table, images):
    best = table.copy()
    for image in images:
        np.minimum(best, permute_masks_np(table, image), out=best)
    return best


def elemental_terms_np(n_bits):
    full = (1 << n_bits) - 1
    h_masks = np.zeros((n_bits, 4), dtype=np.int64)
    h_coefs = np.zeros((n_bits, 4), dtype=np.int64)
    for a in range(n_bits):
        h_masks[a, 0] = full
        h_masks[a, 1] = full & ~(1 << a)
        h_coefs[a, :2] = (1, -1)
    blocks_m = [h_masks]
    blocks_c = [h_coefs]
    width = n_bits - 2
    q = np.arange(1 << width, dtype=np.int64) if width >= 0 else np.zeros(0, np.int64)
    for a in range(n_bits):
        for b in range(a + 1, n_bits):
            rest = [p for p in range(n_bits) if p != a and p != b]
            cset = np.zeros_like(q)
            for t, p in enumerate(rest):
                cset |= ((q >> t) & 1) << p
            m = np.empty((len(q), 4), dtype=np.int64)
            m[:, 0] = cset | (1 << a)
            m[:, 1] = cset | (1 << b)
            m[:, 2] = cset | (1 << a) | (1 << b)
            m[:, 3] = cset
            c = np.empty((len(q), 4), dtype=np.int64)
            c[:] = (1, 1, -1, -1)
            blocks_m.append(m)
            blocks_c.append(c)
    return np.concatenate(blocks_m), np.concatenate(blocks_c)


def _sort_rows(cols, vals):
    key = np.where(cols < 0, np.iinfo(np.int64).max, cols)
    order = np.argsort(key, axis=1, kind="stable")
    return np.take_along_axis(cols, order, 1), np.take_along_axis(vals, order, 1)


def rewrite_rows_np(masks, coefs, colmap):
    """Map subset terms to columns, merge repeats, normalise sign and scale.

    Returns ``(cols, vals, flipped)``: per row, column ids ascending and padded
    with -1, integer coefficients with gcd 1 and a positive leading entry, and
    whether the row was negated (which reverses an inequality).
    """
    cols = np.where(coefs != 0, colmap[masks], -1).astype(np.int64)
    vals = np.where(cols >= 0, coefs, 0).astype(np.int64)
    cols, vals = _sort_rows(cols, vals)
    rows = np.arange(len(cols))
    head = np.zeros(len(cols), dtype=np.int64)
    orig = cols.copy()
    for k in range(1, cols.shape[1]):
        same = (orig[:, k] == orig[:, k - 1]) & (orig[:, k] >= 0)
        head = np.where(same, head, k)
        np.add.at(vals, (rows[same], head[same]), vals[same, k])
        vals[same, k] = 0
        cols[same, k] = -1
    cols = np.where(vals != 0, cols, -1)
    vals = np.where(cols >= 0, vals, 0)
    cols, vals = _sort_rows(cols, vals)
    g = np.gcd.reduce(np.abs(vals), axis=1)
    g[g == 0] = 1
    vals //= g[:, None]
    flipped = vals[:, 0] < 0
    vals[flipped] *= -1
    return cols, vals, flipped


def pivot_np(T, b, d, r, e):
    """Dictionary pivot: basic variable of row ``r`` leaves, nonbasic ``e`` enters.

    Works for float64 and object (Fraction) arrays.  Returns the objective
    increase ``d[e] * b[r] / T[r, e]``.
    """
    p = T[r, e]
    row = T[r] / p
    row[e] = 1 / p
    br = b[r] / p
    col = T[:, e].copy()
    col[r] = 0
    nz = np.nonzero(col)[0]
    if len(nz):
        cv = col[nz]
        T[nz] -= np.outer(cv, row)
        T[nz, e] = -cv / p
        b[nz] -= cv * br
    T[r] = row
    b[r] = br
    de = d[e]
    gain = de * br
    d -= de * row
    d[e] = -de / p
    return gain


# ---------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:

    @njit(cache=True)
    def _closure_table_nb(n_bits, det, dep):
        size = 1 << n_bits
        table = np.empty(size, dtype=np.int64)
        for s in range(size):
            cur = np.int64(s)
            changed = True
            while changed:
                changed = False
                for t in range(det.shape[0]):
                    if (cur & det[t]) == det[t] and (cur | dep[t]) != cur:
                        cur |= dep[t]
                        changed = True
            table[s] = cur
        return table

    @njit(cache=True)
    def _permute_masks_nb(masks, image):
        out = np.zeros_like(masks)
        for idx in range(masks.shape[0]):
            m = masks[idx]
            acc = np.int64(0)
            p = 0
            while m:
                if m & 1:
                    acc |= np.int64(1) << image[p]
                m >>= 1
                p += 1
            out[idx] = acc
        return out

    @njit(cache=True)
    def _orbit_min_nb(table, images):
        best = table.copy()
        for g in range(images.shape[0]):
            image = images[g]
            for idx in range(table.shape[0]):
                m = table[idx]
                acc = np.int64(0)
                p = 0
                while m:
                    if m & 1:
                        acc |= np.int64(1) << image[p]
                    m >>= 1
                    p += 1
                if acc < best[idx]:
                    best[idx] = acc
        return best

    @njit(cache=True)
    def _elemental_terms_nb(n_bits):
        full = (np.int64(1) << n_bits) - 1
        width = n_bits - 2
        per_pair = (1 << width) if width >= 0 else 0
        n_rows = n_bits + (n_bits * (n_bits - 1) // 2) * per_pair
        masks = np.zeros((n_rows, 4), dtype=np.int64)
        coefs = np.zeros((n_rows, 4), dtype=np.int64)
        for a in range(n_bits):
            masks[a, 0] = full
            masks[a, 1] = full & ~(np.int64(1) << a)
            coefs[a, 0] = 1
            coefs[a, 1] = -1
        row = n_bits
        rest = np.empty(max(width, 0), dtype=np.int64)
        for a in range(n_bits):
            for b in range(a + 1, n_bits):
                t = 0
                for p in range(n_bits):
                    if p != a and p != b:
                        rest[t] = p
                        t += 1
                ba = np.int64(1) << a
                bb = np.int64(1) << b
                for q in range(per_pair):
                    c = np.int64(0)
                    for t in range(width):
                        if (q >> t) & 1:
                            c |= np.int64(1) << rest[t]
                    masks[row, 0] = c | ba
                    masks[row, 1] = c | bb
                    masks[row, 2] = c | ba | bb
                    masks[row, 3] = c
                    coefs[row, 0] = 1
                    coefs[row, 1] = 1
                    coefs[row, 2] = -1
                    coefs[row, 3] = -1
                    row += 1
        return masks, coefs

    @njit(cache=True)
    def _gcd(a, b):
        while b:
            a, b = b, a % b
        return a

    @njit(cache=True)
    def _rewrite_rows_nb(masks, coefs, colmap):
        n_rows, w = masks.shape
        cols = np.full((n_rows, w), -1, dtype=np.int64)
        vals = np.zeros((n_rows, w), dtype=np.int64)
        flipped = np.zeros(n_rows, dtype=np.bool_)
        tc = np.empty(w, dtype=np.int64)
        tv = np.empty(w, dtype=np.int64)
        for i in range(n_rows):
            k = 0
            for t in range(w):
                if coefs[i, t] == 0:
                    continue
                c = colmap[masks[i, t]]
                if c < 0:
                    continue
                merged = False
                for u in range(k):
                    if tc[u] == c:
                        tv[u] += coefs[i, t]
                        merged = True
                        break
                if not merged:
                    tc[k] = c
                    tv[k] = coefs[i, t]
                    k += 1
            # insertion sort by column
            for u in range(1, k):
                cu = tc[u]
                vu = tv[u]
                v = u - 1
                while v >= 0 and tc[v] > cu:
                    tc[v + 1] = tc[v]
                    tv[v + 1] = tv[v]
                    v -= 1
                tc[v + 1] = cu
                tv[v + 1] = vu
            out = 0
            g = 0
            for u in range(k):
                if tv[u] != 0:
                    cols[i, out] = tc[u]
                    vals[i, out] = tv[u]
                    g = _gcd(g, abs(tv[u]))
                    out += 1
            if out == 0:
                continue
            sign = 1
            if vals[i, 0] < 0:
                sign = -1
                flipped[i] = True
            for u in range(out):
                vals[i, u] = sign * (vals[i, u] // g)
        return cols, vals, flipped

    @njit(cache=True)
    def _pivot_nb(T, b, d, r, e):
        m, n = T.shape
        p = T[r, e]
        row = T[r].copy() / p
        row[e] = 1.0 / p
        br = b[r] / p
        for i in range(m):
            if i == r:
                continue
            f = T[i, e]
            if f == 0.0:
                continue
            for j in range(n):
                T[i, j] -= f * row[j]
            T[i, e] = -f / p
            b[i] -= f * br
        for j in range(n):
            T[r, j] = row[j]
        b[r] = br
        de = d[e]
        for j in range(n):
            d[j] -= de * row[j]
        d[e] = -de / p
        return de * br

    def closure_table_nb(n_bits, det, dep):
        return _closure_table_nb(n_bits, np.asarray(det, np.int64), np.asarray(dep, np.int64))

    def permute_masks_nb(masks, image):
        return _permute_masks_nb(np.asarray(masks, np.int64), np.asarray(image, np.int64))

    def orbit_min_nb(table, images):
        return _orbit_min_nb(np.asarray(table, np.int64), np.atleast_2d(np.asarray(images, np.int64)))

    def elemental_terms_nb(n_bits):
        return _elemental_terms_nb(n_bits)

    def rewrite_rows_nb(masks, coefs, colmap):
        return _rewrite_rows_nb(np.asarray(masks, np.int64), np.asarray(coefs, np.int64),
                                np.asarray(colmap, np.int64))

    def pivot_nb(T, b, d, r, e):
        if T.dtype != np.float64:
            return pivot_np(T, b, d, r, e)
        return _pivot_nb(T, b, d, r, e)


if HAVE_NUMBA:
    closure_table = closure_table_nb
    permute_masks = permute_masks_nb
    orbit_min = orbit_min_nb
    elemental_terms = elemental_terms_nb
    rewrite_rows = rewrite_rows_nb
    pivot = pivot_nb
else:
    closure_table = closure_table_np
    permute_masks = permute_masks_np
    orbit_min = orbit_min_np
    elemental_terms = elemental_terms_np
    rewrite_rows = rewrite_rows_np
    pivot = pivot_np
