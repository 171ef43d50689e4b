"""Hot loops, each in a numba and a numpy flavour.

The public wrappers at the bottom dispatch on ``_accel.USE_NUMBA``. Both
flavours are importable directly so tests and the benchmark can compare
them on identical inputs.
"""

import numpy as np
from scipy import ndimage

from datefield._accel import USE_NUMBA, njit

# window stage codes, shared by both flavours
REJECT_ORDER = -1
REJECT_SPACING = -2
REJECT_NUMERIC = -3
NON_DATE = 0
SLASH = 1
DASH_OR_DOT = 2

_EIGHT = np.ones((3, 3), dtype=bool)


# ---------------------------------------------------------------------------
# connected components (8-connectivity)


@njit
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    # smaller root wins so that the root is the first-created label
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


@njit
def _label_numba(bits):
    h, w = bits.shape
    labels = np.zeros((h, w), dtype=np.int32)
    parent = np.zeros(h * w // 2 + w + 2, dtype=np.int32)
    nxt = 1
    for y in range(h):
        for x in range(w):
            if bits[y, x] == 0:
                continue
            cur = 0
            # already-visited half of the 8-neighbourhood
            for dy, dx in ((-1, -1), (-1, 0), (-1, 1), (0, -1)):
                yy = y + dy
                xx = x + dx
                if yy < 0 or xx < 0 or xx >= w:
                    continue
                lab = labels[yy, xx]
                if lab == 0:
                    continue
                if cur == 0:
                    cur = lab
                else:
                    _union(parent, cur, lab)
            if cur == 0:
                if nxt >= parent.shape[0]:
                    grown = np.zeros(parent.shape[0] * 2, dtype=np.int32)
                    grown[: parent.shape[0]] = parent
                    parent = grown
                parent[nxt] = nxt
                cur = nxt
                nxt += 1
            labels[y, x] = cur

    # roots are the first-created label of each component, which is the label
    # of its first pixel in raster order; number them densely in that order
    final = np.zeros(nxt, dtype=np.int32)
    n = 0
    for i in range(1, nxt):
        r = _find(parent, i)
        if r == i:
            n += 1
            final[i] = n
    for i in range(1, nxt):
        final[i] = final[_find(parent, i)]

    x_min = np.full(n, w, dtype=np.int64)
    y_min = np.full(n, h, dtype=np.int64)
    x_max = np.full(n, -1, dtype=np.int64)
    y_max = np.full(n, -1, dtype=np.int64)
    count = np.zeros(n, dtype=np.int64)
    for y in range(h):
        for x in range(w):
            lab = labels[y, x]
            if lab == 0:
                continue
            f = final[lab]
            labels[y, x] = f
            k = f - 1
            count[k] += 1
            if x < x_min[k]:
                x_min[k] = x
            if x > x_max[k]:
                x_max[k] = x
            if y < y_min[k]:
                y_min[k] = y
            if y > y_max[k]:
                y_max[k] = y
    return labels, x_min, y_min, x_max, y_max, count


def label_components_numba(bits):
    """Label 8-connected ink; returns (labels, x_min, y_min, x_max, y_max, count).

    ``labels`` holds 0 for background and 1..n for components, numbered in
    raster order of each component's first pixel. The stats arrays are
    indexed by label - 1.
    """
    return _label_numba(np.ascontiguousarray(bits, dtype=np.uint8))


def label_components_numpy(bits):
    labels, n = ndimage.label(np.asarray(bits, dtype=bool), structure=_EIGHT)
    labels = labels.astype(np.int32, copy=False)
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return labels, empty, empty.copy(), empty.copy(), empty.copy(), empty.copy()

    flat = labels.ravel()
    ink = np.flatnonzero(flat)
    # first raster index per label, then renumber so ids follow that order
    first = np.full(n + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat[ink], ink)
    order = np.argsort(first[1:], kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[order + 1] = np.arange(1, n + 1, dtype=np.int32)
    labels = remap[labels]

    slices = ndimage.find_objects(labels)
    y_min = np.array([s[0].start for s in slices], dtype=np.int64)
    y_max = np.array([s[0].stop - 1 for s in slices], dtype=np.int64)
    x_min = np.array([s[1].start for s in slices], dtype=np.int64)
    x_max = np.array([s[1].stop - 1 for s in slices], dtype=np.int64)
    count = np.bincount(labels.ravel(), minlength=n + 1)[1:].astype(np.int64)
    return labels, x_min, y_min, x_max, y_max, count


# ---------------------------------------------------------------------------
# eight-component window scan


@njit
def _nested(inner_lo, inner_hi, outer_lo, outer_hi):
    return (
        outer_lo <= inner_lo
        and inner_lo <= outer_hi
        and outer_lo <= inner_hi
        and inner_hi <= outer_hi
    )


@njit
def _scan_numba(x_min, y_min, x_max, y_max, lo, hi, spacing_mult):
    n = x_min.shape[0]
    m = n - 7 if n >= 8 else 0
    codes = np.zeros(m, dtype=np.int8)
    feats = np.full((m, 6), np.nan)
    for s in range(m):
        ordered = True
        for i in range(s, s + 7):
            if not x_min[i + 1] > x_min[i]:
                ordered = False
                break

        w_max = 0
        for i in range(s, s + 8):
            wd = x_max[i] - x_min[i] + 1
            if wd > w_max:
                w_max = wd
        spaced = True
        limit = spacing_mult * w_max
        for i in range(s, s + 7):
            gap = x_min[i + 1] - x_max[i] - 1
            if gap < 0:
                gap = 0
            if gap > limit:
                spaced = False
                break

        numeric = True
        for p in range(3):
            a = s + 3 * p
            b = a + 1
            ha = y_max[a] - y_min[a] + 1
            hb = y_max[b] - y_min[b] + 1
            ya = (y_min[a] + y_max[a]) / 2.0
            yb = (y_min[b] + y_max[b]) / 2.0
            fh = hb / ha
            feats[s, 2 * p] = fh
            if not (lo[2 * p] <= fh <= hi[2 * p]):
                numeric = False
            if ya > 0.0:
                fy = yb / ya
                feats[s, 2 * p + 1] = fy
                if not (lo[2 * p + 1] <= fy <= hi[2 * p + 1]):
                    numeric = False
            else:
                numeric = False

        if not ordered:
            codes[s] = REJECT_ORDER
            continue
        if not spaced:
            codes[s] = REJECT_SPACING
            continue
        if not numeric:
            codes[s] = REJECT_NUMERIC
            continue

        c2 = s + 1
        c3 = s + 2
        c4 = s + 3
        c5 = s + 4
        c6 = s + 5
        c7 = s + 6
        dash = (
            _nested(y_min[c3], y_max[c3], y_min[c2], y_max[c2])
            and _nested(y_min[c3], y_max[c3], y_min[c4], y_max[c4])
            and _nested(y_min[c6], y_max[c6], y_min[c5], y_max[c5])
            and _nested(y_min[c6], y_max[c6], y_min[c7], y_max[c7])
        )
        if dash:
            codes[s] = DASH_OR_DOT
            continue
        slash = (
            _nested(y_min[c2], y_max[c2], y_min[c3], y_max[c3])
            and _nested(y_min[c4], y_max[c4], y_min[c3], y_max[c3])
            and _nested(y_min[c5], y_max[c5], y_min[c6], y_max[c6])
            and _nested(y_min[c7], y_max[c7], y_min[c6], y_max[c6])
        )
        codes[s] = SLASH if slash else NON_DATE
    return codes, feats


def scan_windows_numba(x_min, y_min, x_max, y_max, lo, hi, spacing_mult):
    """Evaluate every 8-run of a sorted component line.

    Returns ``(codes, feats)``: one stage code per window start (see the
    module constants) and the six numeric ratios (NaN where a centroid sits
    on row 0).
    """
    return _scan_numba(
        np.ascontiguousarray(x_min, dtype=np.int64),
        np.ascontiguousarray(y_min, dtype=np.int64),
        np.ascontiguousarray(x_max, dtype=np.int64),
        np.ascontiguousarray(y_max, dtype=np.int64),
        np.ascontiguousarray(lo, dtype=np.float64),
        np.ascontiguousarray(hi, dtype=np.float64),
        float(spacing_mult),
    )


def _nested_np(inner_lo, inner_hi, outer_lo, outer_hi):
    return (outer_lo <= inner_lo) & (inner_lo <= outer_hi) & (outer_lo <= inner_hi) & (inner_hi <= outer_hi)


def scan_windows_numpy(x_min, y_min, x_max, y_max, lo, hi, spacing_mult):
    from numpy.lib.stride_tricks import sliding_window_view

    x_min = np.asarray(x_min, dtype=np.int64)
    y_min = np.asarray(y_min, dtype=np.int64)
    x_max = np.asarray(x_max, dtype=np.int64)
    y_max = np.asarray(y_max, dtype=np.int64)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    n = x_min.shape[0]
    if n < 8:
        return np.zeros(0, dtype=np.int8), np.full((0, 6), np.nan)

    X0 = sliding_window_view(x_min, 8)
    X1 = sliding_window_view(x_max, 8)
    Y0 = sliding_window_view(y_min, 8)
    Y1 = sliding_window_view(y_max, 8)
    m = X0.shape[0]

    ordered = np.all(X0[:, 1:] > X0[:, :-1], axis=1)
    w_max = (X1 - X0 + 1).max(axis=1)
    gaps = np.maximum(X0[:, 1:] - X1[:, :-1] - 1, 0)
    spaced = np.all(gaps <= (spacing_mult * w_max)[:, None], axis=1)

    H = Y1 - Y0 + 1
    Yc = (Y0 + Y1) / 2.0
    feats = np.full((m, 6), np.nan)
    numeric = np.ones(m, dtype=bool)
    for p in range(3):
        a, b = 3 * p, 3 * p + 1
        fh = H[:, b] / H[:, a]
        feats[:, 2 * p] = fh
        numeric &= (lo[2 * p] <= fh) & (fh <= hi[2 * p])
        ya = Yc[:, a]
        ok = ya > 0.0
        fy = np.divide(Yc[:, b], ya, out=np.full(m, np.nan), where=ok)
        feats[:, 2 * p + 1] = fy
        numeric &= ok & (lo[2 * p + 1] <= fy) & (fy <= hi[2 * p + 1])

    def nest(i, o):
        return _nested_np(Y0[:, i], Y1[:, i], Y0[:, o], Y1[:, o])

    dash = nest(2, 1) & nest(2, 3) & nest(5, 4) & nest(5, 6)
    slash = nest(1, 2) & nest(3, 2) & nest(4, 5) & nest(6, 5)

    codes = np.full(m, NON_DATE, dtype=np.int8)
    codes[slash] = SLASH
    codes[dash] = DASH_OR_DOT
    codes[~numeric] = REJECT_NUMERIC
    codes[~spaced] = REJECT_SPACING
    codes[~ordered] = REJECT_ORDER
    return codes, feats


if USE_NUMBA:
    label_components_raw = label_components_numba
    scan_windows = scan_windows_numba
else:
    label_components_raw = label_components_numpy
    scan_windows = scan_windows_numpy
