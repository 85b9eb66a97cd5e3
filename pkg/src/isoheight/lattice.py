"""Exact LLL on Gram matrices, plus extraction of a basis from a generating set."""
from __future__ import annotations

import math
from fractions import Fraction

DEFAULT_DELTA = Fraction(99, 100)


def round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def _gso(G, n):
    mu = [[Fraction(0)] * n for _ in range(n)]
    B = [Fraction(0)] * n
    for i in range(n):
        for j in range(i):
            s = Fraction(G[i][j])
            for k in range(j):
                s -= mu[j][k] * mu[i][k] * B[k]
            mu[i][j] = s / B[j]
        s = Fraction(G[i][i])
        for k in range(i):
            s -= mu[i][k] * mu[i][k] * B[k]
        B[i] = s
    return mu, B


def lll_gram(gram, delta: Fraction = DEFAULT_DELTA):
    """LLL-reduce the basis whose Gram matrix is ``gram`` (positive definite).

    Returns ``(U, G)`` where the columns of the integer matrix ``U`` express the
    reduced basis in the old one and ``G = U^T gram U``. Arithmetic is exact;
    the result is fully size-reduced (every |mu_ij| <= 1/2).
    """
    n = len(gram)
    G = [[x for x in row] for row in gram]
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    if n <= 1:
        return U, G
    mu, B = _gso(G, n)
    if any(b <= 0 for b in B):
        raise ValueError("Gram matrix is not positive definite")

    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round_half_up(mu[k][j])
            if q:
                old_kk, old_kj, old_jj = G[k][k], G[k][j], G[j][j]
                for r in U:
                    r[k] -= q * r[j]
                for i in range(n):
                    if i != k:
                        G[k][i] -= q * G[j][i]
                        G[i][k] = G[k][i]
                G[k][k] = old_kk - 2 * q * old_kj + q * q * old_jj
                for l in range(j):
                    mu[k][l] -= q * mu[j][l]
                mu[k][j] -= q
        if B[k] >= (delta - mu[k][k - 1] ** 2) * B[k - 1]:
            k += 1
        else:
            for r in U:
                r[k], r[k - 1] = r[k - 1], r[k]
            G[k], G[k - 1] = G[k - 1], G[k]
            for r in G:
                r[k], r[k - 1] = r[k - 1], r[k]
            mu, B = _gso(G, n)
            k = max(k - 1, 1)
    return U, G


def row_basis(rows: list[list[int]]) -> list[list[int]]:
    """Basis of the Z-span of integer vectors (row echelon, zero rows dropped)."""
    a = [list(r) for r in rows if any(r)]
    if not a:
        return []
    ncols = len(a[0])
    out = []
    col = 0
    while a and col < ncols:
        nz = [r for r in a if r[col] != 0]
        if not nz:
            col += 1
            continue
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            p = nz[0]
            for r in nz[1:]:
                q = r[col] // p[col]
                for t in range(ncols):
                    r[t] -= q * p[t]
            nz = [r for r in nz if r[col] != 0]
        pivot = nz[0]
        out.append(pivot)
        a = [r for r in a if r is not pivot and any(r)]
        col += 1
    return out


def reduced_basis(rows: list[list[int]], delta: Fraction = DEFAULT_DELTA) -> list[list[int]]:
    """LLL-reduced (Euclidean) basis of the lattice spanned by ``rows``."""
    basis = row_basis(rows)
    m = len(basis)
    if m <= 1:
        return basis
    gram = [[sum(x * y for x, y in zip(b, c)) for c in basis] for b in basis]
    U, _ = lll_gram(gram, delta)
    return [[sum(U[i][k] * basis[i][t] for i in range(m)) for t in range(len(basis[0]))]
            for k in range(m)]
