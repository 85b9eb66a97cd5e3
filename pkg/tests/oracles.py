"""Independent reference implementations used only by the tests.

None of these share code with the package: they are slow, obvious
algorithms that the fast paths are compared against.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import mpmath


def cofactor_det(rows):
    """Laplace expansion along the first row."""
    n = len(rows)
    if n == 0:
        return 1
    if n == 1:
        return rows[0][0]
    total = 0
    for j in range(n):
        if rows[0][j] == 0:
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        total += (-1) ** j * rows[0][j] * cofactor_det(minor)
    return total


def naive_matmul(a, b):
    return [[sum(Fraction(a[i][k]) * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


def naive_height(rows):
    best = 1
    for r in rows:
        for x in r:
            x = Fraction(x)
            best = max(best, abs(x.numerator), x.denominator) if x != 0 else best
    return best


def gauss_form_reduce(a, b, c):
    """Reduce a positive binary form a x^2 + 2 b x y + c y^2 by brute force over GL_2(Z) words.

    Breadth-first over short words in S = [[0,-1],[1,0]], T^{+-1}; returns the
    smallest-trace form reached and the transform. Only good for tiny inputs.
    """
    def act(q, m):
        (p, r), (s, t) = m
        A, B, C = q
        # m^T Q m
        return (A * p * p + 2 * B * p * s + C * s * s,
                A * p * r + B * (p * t + r * s) + C * s * t,
                A * r * r + 2 * B * r * t + C * t * t)

    gens = [((0, -1), (1, 0)), ((1, 1), (0, 1)), ((1, -1), (0, 1)), ((1, 0), (1, 1)), ((1, 0), (-1, 1))]
    start = (a, b, c)
    seen = {start}
    frontier = [start]
    best = start
    cap = 4 * (a + c)
    for _ in range(12):
        nxt = []
        for q in frontier:
            for m in gens:
                q2 = act(q, m)
                if q2 not in seen and q2[0] + q2[2] <= cap:
                    seen.add(q2)
                    nxt.append(q2)
                    if q2[0] + q2[2] < best[0] + best[2]:
                        best = q2
        frontier = nxt
    return best


def lattice_reduce_upper(z, prec=200):
    """Reduce tau in the upper half plane via Lagrange-Gauss on the lattice Z + Z tau.

    Works on the basis (w1, w2) = (1, tau) as complex numbers and tracks the
    integer transform. Returns (tau_reduced, (a, b, c, d)) with
    tau_reduced = (a tau + b) / (c tau + d) and ad - bc = 1.
    """
    ctx = mpmath.MPContext()
    ctx.prec = prec
    tau = ctx.mpc(z)
    # w2 = a tau + b, w1 = c tau + d
    a, b, c, d = 1, 0, 0, 1
    w1, w2 = ctx.mpc(1), tau
    while True:
        if abs(w2) < abs(w1):
            w1, w2 = w2, -w1
            a, b, c, d = -c, -d, a, b
        mu = ctx.re(w2 * ctx.conj(w1)) / abs(w1) ** 2
        k = int(ctx.floor(mu + ctx.mpf(1) / 2))
        if k == 0:
            break
        w2 = w2 - k * w1
        a, b = a - k * c, b - k * d
    if ctx.im(w2 / w1) < 0:
        w1 = -w1
        c, d = -c, -d
    return w2 / w1, (a, b, c, d)


def pell_fundamental(D, limit=10**6):
    """Smallest x, y > 0 with x^2 - D y^2 = +-1, by direct search on y."""
    for y in range(1, limit):
        for s in (-1, 1):
            x2 = D * y * y + s
            if x2 > 0:
                x = mpmath.sqrt(x2)
                xi = int(x)
                for cand in (xi - 1, xi, xi + 1):
                    if cand > 0 and cand * cand == x2:
                        return cand, y
    raise ValueError("no solution in range")


def unit_search(D, bound):
    """All units a + b w of the order of discriminant D with |a|, |b| <= bound."""
    t = D % 4
    m = (D - t) // 4
    out = []
    for a, b in itertools.product(range(-bound, bound + 1), repeat=2):
        if abs(a * a + a * b * t - b * b * m) == 1:
            out.append((a, b))
    return out
