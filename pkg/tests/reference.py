"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here calls into the vectorised code paths of the package: windows are
sliced by hand, normalised with plain Python arithmetic, transformed by
summing each kept DFT term directly and discretised by counting thresholds.
"""

import math
from collections import Counter


def naive_znorm(window):
    n = len(window)
    mean = sum(window) / n
    var = sum((x - mean) ** 2 for x in window) / n
    sd = math.sqrt(var)
    if sd < 1e-8:
        return [0.0] * n
    return [(x - mean) / sd for x in window]


def naive_dft(window, l, p):
    """Kept DFT terms by direct summation, interleaved as (Re, Im) pairs."""
    w = len(window)
    start = 1 if p else 0
    out = []
    for k in range(start, start + l // 2):
        re = sum(x * math.cos(2 * math.pi * j * k / w) for j, x in enumerate(window))
        im = -sum(x * math.sin(2 * math.pi * j * k / w) for j, x in enumerate(window))
        out.extend([re, im])
    return out


def naive_coefficients(series, l, w, p):
    rows = []
    for j in range(len(series) - w + 1):
        window = list(series[j : j + w])
        if p:
            window = naive_znorm(window)
        rows.append(naive_dft(window, l, p))
    return rows


def naive_mcb(dataset_rows, l, alpha, w, p):
    columns = [[] for _ in range(l)]
    for series in dataset_rows:
        for coeffs in naive_coefficients(series, l, w, p):
            for c, v in enumerate(coeffs):
                columns[c].append(v)
    bp = []
    for col in columns:
        col = sorted(col)
        N = len(col)
        row = []
        for k in range(1, alpha):
            r = (k * N) // alpha
            hi = min(max(r, 0), N - 1)
            lo = min(max(r - 1, 0), N - 1)
            row.append((col[lo] + col[hi]) / 2)
        bp.append(row)
    return bp


def naive_word(coeffs, bp):
    alpha = len(bp[0]) + 1
    word = 0
    for c, v in enumerate(coeffs):
        symbol = sum(1 for t in bp[c] if t < v)
        word += symbol * alpha**c
    return word


def naive_bag(series, l, w, p, bp):
    bag = Counter()
    prev = None
    for coeffs in naive_coefficients(series, l, w, p):
        word = naive_word(coeffs, bp)
        if word != prev:
            bag[word] += 1
        prev = word
    return dict(bag)


def dense_distance(a, b):
    """BOSS distance over the explicit union vocabulary with dense vectors."""
    universe = sorted(set(a) | set(b))
    va = [a.get(u, 0) for u in universe]
    vb = [b.get(u, 0) for u in universe]
    return float(sum((x - y) ** 2 for x, y in zip(va, vb) if x > 0))


def nn_label(query_bag, bags, labels, exclude=None):
    best, best_i = None, None
    for i, bag in enumerate(bags):
        if i == exclude:
            continue
        d = dense_distance(query_bag, bag)
        if best is None or d < best:
            best, best_i = d, i
    return labels[best_i]


def top_s_reference(accuracies, s):
    """Ordinals (0-based build order) of the s best, earlier builds winning ties."""
    ranked = sorted(range(len(accuracies)), key=lambda i: (-accuracies[i], i))
    return sorted(ranked[:s])


def alg3_simulation(accuracies, s):
    """Line-by-line replay of the filtered insert/replace loop.

    The fill phase inserts unconditionally; afterwards a newcomer replaces the
    weakest member only when strictly more accurate, the weakest being the
    lowest accuracy and, among equals, the latest built.
    """
    slots = []
    for i, acc in enumerate(accuracies):
        if len(slots) < s:
            slots.append((acc, i))
            continue
        worst = min(range(len(slots)), key=lambda j: (slots[j][0], -slots[j][1]))
        if acc > slots[worst][0]:
            slots[worst] = (acc, i)
    return sorted(i for _, i in slots)


def grid_windows(m):
    count = max(1, m // 4)
    lo, hi = min(10, m), m
    vals = []
    for i in range(count):
        v = lo + (hi - lo) * i / (count - 1) if count > 1 else hi
        r = int(v + 0.5)
        if r not in vals:
            vals.append(r)
    return vals


def grid_reference(series_rows, labels, retention=0.92):
    """Enumerate, leave-one-out and filter with the naive pieces above.

    Returns the set of retained (l, w, p) triples and their accuracies.
    """
    m = len(series_rows[0])
    accs = {}
    for w in grid_windows(m):
        for l in (16, 14, 12, 10, 8):
            for p in (True, False):
                if l > w - (2 if p else 0):
                    continue
                bp = naive_mcb(series_rows, l, 4, w, p)
                bags = [naive_bag(s, l, w, p, bp) for s in series_rows]
                correct = sum(
                    nn_label(bags[i], bags, labels, exclude=i) == labels[i]
                    for i in range(len(bags))
                )
                accs[(l, w, p)] = correct / len(bags)
    best = max(accs.values())
    return {k for k, a in accs.items() if a >= retention * best}, accs
