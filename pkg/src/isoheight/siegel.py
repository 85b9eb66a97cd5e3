"""Siegel upper half space: the (AZ + B)(CZ + D)^-1 action and fundamental-domain reduction.

Every point carries its own working precision; arithmetic runs in a private
mpmath context per (thread, precision), so there is no shared global state.
Tolerances scale as 2^(-precision_bits/2).
"""
from __future__ import annotations

import itertools
import math
import os
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from mpmath.ctx_mp import MPContext

from .errors import (
    DimensionError,
    NotInSiegelSpaceError,
    PrecisionExhaustedError,
    ReductionFailedError,
    SingularActionError,
)
from .exact import ExactMatrix, adjugate_inverse, det, height, xgcd
from .lattice import lll_gram, round_half_up, row_basis
from .symplectic import gsp_multiplier

DEFAULT_PRECISION_BITS = 128
PRECISION_ENV = "SIEGEL_PRECISION_BITS"

_local = threading.local()


def default_precision_bits() -> int:
    raw = os.environ.get(PRECISION_ENV)
    return int(raw) if raw else DEFAULT_PRECISION_BITS


def context(bits: int) -> MPContext:
    """mpmath context at ``bits`` of precision, private to the calling thread."""
    cache = getattr(_local, "ctxs", None)
    if cache is None:
        cache = _local.ctxs = {}
    ctx = cache.get(bits)
    if ctx is None:
        ctx = MPContext()
        ctx.prec = bits
        cache[bits] = ctx
    return ctx


def tolerance(bits: int) -> float:
    return 2.0 ** (-bits / 2)


# -- small dense complex helpers ---------------------------------------------

def _mm(a, b):
    return [[sum((x * y for x, y in zip(r, c)), 0) for c in zip(*b)] for r in a]


def _madd(a, b):
    return [[x + y for x, y in zip(r, s)] for r, s in zip(a, b)]


def _inv_norm(ctx, M):
    """Inverse by Gauss-Jordan with partial pivoting; also returns ||M||inf ||M^-1||inf."""
    n = len(M)
    a = [list(r) + [ctx.mpf(int(i == j)) for j in range(n)] for i, r in enumerate(M)]
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(a[i][k]))
        if a[p][k] == 0:
            return None, math.inf
        a[k], a[p] = a[p], a[k]
        piv = a[k][k]
        a[k] = [x / piv for x in a[k]]
        for i in range(n):
            if i != k and a[i][k] != 0:
                f = a[i][k]
                a[i] = [x - f * y for x, y in zip(a[i], a[k])]
    inv = [r[n:] for r in a]
    norm = max(sum(abs(x) for x in r) for r in M)
    inorm = max(sum(abs(x) for x in r) for r in inv)
    return inv, float(norm * inorm)


def _det(M):
    n = len(M)
    a = [list(r) for r in M]
    d = 1
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(a[i][k]))
        if a[p][k] == 0:
            return 0
        if p != k:
            a[k], a[p] = a[p], a[k]
            d = -d
        d *= a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            a[i] = [x - f * y for x, y in zip(a[i], a[k])]
    return d


def _cholesky_pivots(Y):
    n = len(Y)
    L = [[0] * n for _ in range(n)]
    piv = []
    for j in range(n):
        s = Y[j][j] - sum(L[j][k] ** 2 for k in range(j))
        piv.append(s)
        if s <= 0:
            return piv
        L[j][j] = s ** 0.5
        for i in range(j + 1, n):
            L[i][j] = (Y[i][j] - sum(L[i][k] * L[j][k] for k in range(j))) / L[j][j]
    return piv


def _to_fraction(x) -> Fraction:
    sign, man, exp, _ = x._mpf_
    man = -int(man) if sign else int(man)
    return Fraction(man * 2 ** exp) if exp >= 0 else Fraction(man, 2 ** -exp)


# -- points --------------------------------------------------------------------

@dataclass(frozen=True)
class SiegelPoint:
    """Symmetric g x g complex matrix with positive-definite imaginary part."""

    g: int
    entries: tuple
    precision_bits: int = DEFAULT_PRECISION_BITS

    def __post_init__(self):
        if len(self.entries) != self.g or any(len(r) != self.g for r in self.entries):
            raise DimensionError("entries must be g x g")
        problem = _membership_problem(self.entries, self.precision_bits)
        if problem:
            raise NotInSiegelSpaceError(problem)

    @property
    def ctx(self) -> MPContext:
        return context(self.precision_bits)

    @classmethod
    def from_rows(cls, rows, precision_bits: int | None = None) -> "SiegelPoint":
        """Build from python complex numbers, strings, mpc values, or (re, im) pairs."""
        bits = precision_bits or default_precision_bits()
        ctx = context(bits)

        def conv(x):
            if isinstance(x, tuple):
                return ctx.mpc(_real(ctx, x[0]), _real(ctx, x[1]))
            if isinstance(x, str):
                re_s, im_s = _split_complex(x)
                return ctx.mpc(_real(ctx, re_s), _real(ctx, im_s))
            if isinstance(x, (int, Fraction)):
                return ctx.mpc(_real(ctx, x))
            return ctx.mpc(x)

        ent = tuple(tuple(conv(x) for x in r) for r in rows)
        return cls(len(ent), ent, bits)

    @classmethod
    def scalar(cls, g: int, z, precision_bits: int | None = None) -> "SiegelPoint":
        """z * I_g."""
        return cls.from_rows([[z if i == j else 0 for j in range(g)] for i in range(g)], precision_bits)

    def real(self):
        return [[x.real for x in r] for r in self.entries]

    def imag(self):
        return [[x.imag for x in r] for r in self.entries]

    def distance(self, other: "SiegelPoint"):
        """Sup-norm of the entrywise difference."""
        return max(abs(x - y) for r, s in zip(self.entries, other.entries) for x, y in zip(r, s))

    def scale(self):
        return max(1, max(abs(x) for r in self.entries for x in r))

    def rows(self):
        return [list(r) for r in self.entries]


def _split_complex(text: str) -> tuple[str, str]:
    s = text.replace(" ", "").replace("i", "j")
    if not s.endswith("j"):
        return s, "0"
    body = s[:-1]
    k = max((i for i, c in enumerate(body) if c in "+-" and i > 0 and body[i - 1] not in "eE"),
            default=0)
    re_s, im_s = body[:k] or "0", body[k:]
    if im_s in ("", "+", "-"):
        im_s += "1"
    return re_s, im_s


def _real(ctx, x):
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    if isinstance(x, str) and "/" in x:
        return _real(ctx, Fraction(x))
    return ctx.mpf(x)


def _membership_problem(entries, bits) -> str | None:
    g = len(entries)
    tol = tolerance(bits)
    scale = max([1] + [abs(x) for r in entries for x in r])
    asym = max((abs(entries[i][j] - entries[j][i]) for i in range(g) for j in range(g)), default=0)
    if asym > tol * scale:
        return f"not symmetric (defect {float(asym):.3e})"
    Y = [[x.imag for x in r] for r in entries]
    piv = _cholesky_pivots(Y)
    if len(piv) < g or min(piv) <= tol * scale:
        return f"Im Z not positive definite (pivots {[float(p) for p in piv]})"
    return None


def _symmetrize(rows):
    g = len(rows)
    return tuple(tuple((rows[i][j] + rows[j][i]) / 2 for j in range(g)) for i in range(g))


# -- the action ------------------------------------------------------------------

def _blocks_mp(ctx, m: ExactMatrix):
    A, B, C, D = m.blocks()
    conv = lambda M: [[_real(ctx, x) if not isinstance(x, int) else ctx.mpf(x) for x in r] for r in M.rows]
    return conv(A), conv(B), conv(C), conv(D)


def mobius_apply(m: ExactMatrix, z: SiegelPoint) -> SiegelPoint:
    """(AZ + B)(CZ + D)^-1 for m = [[A, B], [C, D]] with g x g blocks.

    The map is partial: a singular CZ + D or an output outside H_g raises.
    """
    g = z.g
    if m.shape != (2 * g, 2 * g):
        raise DimensionError(f"expected {2 * g}x{2 * g} matrix")
    ctx = z.ctx
    bits = z.precision_bits
    A, B, C, D = _blocks_mp(ctx, m)
    Z = z.rows()
    num = _madd(_mm(A, Z), B)
    den = _madd(_mm(C, Z), D)
    inv, cond = _inv_norm(ctx, den)
    if inv is None or cond > 2.0 ** (bits / 2):
        raise SingularActionError(f"CZ + D is singular (condition {cond:.3e})")
    if cond > 2.0 ** (bits / 4):
        raise PrecisionExhaustedError(
            f"condition {cond:.3e} loses more than {bits // 4} of {bits} bits")
    W = _mm(num, inv)
    problem = _membership_problem(W, bits)
    if problem:
        raise NotInSiegelSpaceError(f"image not in H_g: {problem}")
    return SiegelPoint(g, _symmetrize(W), bits)


def period_point_from_form(b, z: SiegelPoint) -> SiegelPoint:
    """Period matrix after a symplectic change of basis: apply b^T."""
    cols = b.cols if hasattr(b, "cols") else b
    return mobius_apply(cols.T, z)


# -- fundamental domain --------------------------------------------------------------

def _column_echelon(K: list[list[int]]):
    """Unimodular V with K V = [L | 0], L lower triangular (g x g)."""
    g, n = len(K), len(K[0])
    K = [r[:] for r in K]
    V = [[int(i == j) for j in range(n)] for i in range(n)]
    for i in range(g):
        for j in range(i + 1, n):
            b = K[i][j]
            if b == 0:
                continue
            a = K[i][i]
            d, x, y = xgcd(a, b)
            p, q = -b // d, a // d
            for mat in (K, V):
                for r in mat:
                    ci, cj = r[i], r[j]
                    r[i] = x * ci + y * cj
                    r[j] = p * ci + q * cj
    return [r[:g] for r in K], V


def complete_to_symplectic(C: list[list[int]], D: list[list[int]]) -> ExactMatrix | None:
    """Some [[A, B], [C, D]] in Sp_2g(Z), or None if (C, D) is not a coprime symmetric pair."""
    g = len(C)
    M = [C[i] + D[i] for i in range(g)]
    if any(sum(C[i][k] * D[j][k] for k in range(g)) != sum(C[j][k] * D[i][k] for k in range(g))
           for i in range(g) for j in range(g)):
        return None
    K = [[-x for x in D[i]] + list(C[i]) for i in range(g)]   # M J
    L, V = _column_echelon(K)
    Lm = ExactMatrix.from_ints(L)
    if abs(det(Lm)) != 1:
        return None
    Linv = adjugate_inverse(Lm)
    Y = ExactMatrix.from_ints([r[:g] for r in V]) @ Linv     # (M J) Y = I
    N0 = (-Y).T
    J = ExactMatrix.from_ints([[1 if j == i + g else -1 if i == j + g else 0 for j in range(2 * g)]
                               for i in range(2 * g)])
    Kmat = N0 @ J @ N0.T
    T = ExactMatrix.from_ints([[Kmat[i, j] if j > i else 0 for j in range(g)] for i in range(g)])
    N = N0 + T @ ExactMatrix.from_ints(M)
    gamma = ExactMatrix.from_ints([list(r) for r in N.rows] + M)
    if gsp_multiplier(gamma, g) != 1:
        raise AssertionError("symplectic completion failed")
    return gamma


def _row_space_key(rows: list[list[int]]) -> tuple:
    # row-style Hermite form: canonical for the row space under left GL_g(Z)
    b = row_basis(rows)
    for i, r in enumerate(b):
        c = next(k for k, x in enumerate(r) if x)
        if r[c] < 0:
            b[i] = r = [-x for x in r]
        for j in range(i):
            q = b[j][c] // r[c]
            if q:
                b[j] = [x - q * y for x, y in zip(b[j], r)]
    return tuple(tuple(r) for r in b)


@lru_cache(maxsize=None)
def inversion_set(g: int = 2) -> tuple:
    """Symplectic matrices whose bottom blocks (C, D) have entries in {-1, 0, 1}, C != 0.

    For g = 2 this contains Gottschling's 19 boundary pairs, so requiring
    |det(CZ + D)| >= 1 over the set is exactly the classical condition.
    |det(CZ + D)| only depends on the row space of [C D], so one
    representative is kept per row space.
    """
    out = []
    seen = set()
    for flat in itertools.product((-1, 0, 1), repeat=2 * g * g):
        C = [list(flat[i * g:(i + 1) * g]) for i in range(g)]
        D = [list(flat[g * g + i * g: g * g + (i + 1) * g]) for i in range(g)]
        if not any(any(r) for r in C):
            continue
        rows = [C[i] + D[i] for i in range(g)]
        if len(row_basis(rows)) < g:
            continue
        key = _row_space_key(rows)
        if key in seen:
            continue
        gamma = complete_to_symplectic(C, D)
        if gamma is None:
            continue
        seen.add(key)
        out.append(gamma)
    return tuple(out)


@lru_cache(maxsize=None)
def _inversion_blocks(g: int, bits: int) -> tuple:
    ctx = context(bits)
    out = []
    for gamma in inversion_set(g):
        _, _, C, D = _blocks_mp(ctx, gamma)
        out.append((C, D, gamma))
    return tuple(out)


def _min_inversion(z: SiegelPoint):
    Z = z.rows()
    best = None
    for C, D, gamma in _inversion_blocks(z.g, z.precision_bits):
        val = abs(_det(_madd(_mm(C, Z), D)))
        if best is None or val < best[0]:
            best = (val, gamma)
    return best


@dataclass
class DomainReport:
    inside: bool
    heuristic: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.inside


def _minkowski_violations(Y, tol) -> list[str]:
    g = len(Y)
    out = []
    for k in range(g - 1):
        if Y[k][k] > Y[k + 1][k + 1] + tol:
            out.append(f"y{k}{k} > y{k + 1}{k + 1}")
    for k in range(g):
        for l in range(k + 1, g):
            if abs(2 * Y[k][l]) > Y[k][k] + tol:
                out.append(f"|2 y{k}{l}| > y{k}{k}")
    for k in range(g - 1):
        if Y[k][k + 1] < -tol:
            out.append(f"y{k}{k + 1} < 0")
    return out


def in_fundamental_domain(z: SiegelPoint) -> DomainReport:
    """Check membership in Siegel's fundamental domain.

    Exact inequality sets for g <= 2; for g >= 3 only necessary conditions
    are checked and the report is flagged heuristic.
    """
    tol = tolerance(z.precision_bits) * z.scale()
    g = z.g
    X, Y = z.real(), z.imag()
    bad = []
    for i in range(g):
        for j in range(g):
            if abs(X[i][j]) > 0.5 + tol:
                bad.append(f"|Re z{i}{j}| > 1/2")
    if g == 1:
        if abs(z.entries[0][0]) < 1 - tol:
            bad.append("|z| < 1")
        return DomainReport(not bad, False, bad)
    bad += _minkowski_violations(Y, tol)
    if g == 2:
        val, _ = _min_inversion(z)
        if val < 1 - tol:
            bad.append(f"|det(CZ+D)| = {float(val):.6g} < 1")
        return DomainReport(not bad, False, bad)
    if abs(z.entries[0][0]) < 1 - tol:
        bad.append("|z00| < 1")
    return DomainReport(not bad, True, bad)


@dataclass
class ReductionCertificate:
    gamma: ExactMatrix
    reduced: SiegelPoint
    gamma_height: int
    residual: float
    heuristic: bool = False


def _translation(g: int, S) -> ExactMatrix:
    I = [[int(i == j) for j in range(g)] for i in range(g)]
    Z = [[0] * g for _ in range(g)]
    return ExactMatrix.from_blocks(I, S, Z, I)


def _gl_action(U: list[list[int]]) -> ExactMatrix:
    g = len(U)
    Um = ExactMatrix.from_ints(U)
    Uinv = adjugate_inverse(Um)
    zero = ExactMatrix.zeros(g, g)
    return ExactMatrix.from_blocks(Um.T, zero, zero, Uinv)


def _quasi_inversion(g: int) -> ExactMatrix:
    A = [[0 if (i == j == 0) else int(i == j) for j in range(g)] for i in range(g)]
    B = [[-1 if (i == j == 0) else 0 for j in range(g)] for i in range(g)]
    C = [[1 if (i == j == 0) else 0 for j in range(g)] for i in range(g)]
    return ExactMatrix.from_blocks(A, B, C, A)


def _pairwise_reduce(U, G) -> None:
    """Greedy pairwise reduction in place: sorted diagonal, |2 G_kl| <= G_kk."""
    g = len(G)

    def sub(l, k, q):
        # b_l <- b_l - q b_k
        for r in U:
            r[l] -= q * r[k]
        gll, glk, gkk = G[l][l], G[l][k], G[k][k]
        for i in range(g):
            if i != l:
                G[l][i] -= q * G[k][i]
                G[i][l] = G[l][i]
        G[l][l] = gll - 2 * q * glk + q * q * gkk

    def swap(k, l):
        for r in U:
            r[k], r[l] = r[l], r[k]
        G[k], G[l] = G[l], G[k]
        for r in G:
            r[k], r[l] = r[l], r[k]

    changed = True
    while changed:
        changed = False
        for k in range(g):
            for l in range(g):
                if l != k and abs(2 * G[k][l]) > G[k][k]:
                    sub(l, k, round_half_up(G[k][l] / G[k][k]))
                    changed = True
        for k in range(g - 1):
            if G[k][k] > G[k + 1][k + 1]:
                swap(k, k + 1)
                changed = True


def _reduce_imag(z: SiegelPoint) -> ExactMatrix | None:
    """GL_g(Z) move making Im Z Minkowski reduced (g = 2) or pairwise reduced (g >= 3)."""
    Y = [[_to_fraction(x) for x in r] for r in z.imag()]
    U, G = lll_gram(Y)
    _pairwise_reduce(U, G)
    g = z.g
    # sign convention y_{k,k+1} >= 0
    for k in range(g - 1):
        if G[k][k + 1] < 0:
            for r in U:
                r[k + 1] = -r[k + 1]
            for i in range(g):
                G[k + 1][i] = -G[k + 1][i]
            for i in range(g):
                G[i][k + 1] = -G[i][k + 1]
    if all(U[i][j] == int(i == j) for i in range(g) for j in range(g)):
        return None
    return _gl_action(U)


def _reduce_real(z: SiegelPoint) -> ExactMatrix | None:
    X = z.real()
    S = [[-round_half_up(_to_fraction(x)) for x in r] for r in X]
    if not any(any(r) for r in S):
        return None
    return _translation(z.g, S)


def reduce_to_fundamental(z: SiegelPoint, max_iter: int = 1000) -> ReductionCertificate:
    """Move z into the fundamental domain, returning gamma in Sp_2g(Z) and the image.

    g = 1 is the classical translate/invert loop; g = 2 alternates Minkowski
    reduction of Im Z, real translation and the best inversion from the
    finite set; g >= 3 uses single-block inversions only and is heuristic.
    """
    g = z.g
    n = 2 * g
    gamma = ExactMatrix.identity(n)
    cur = z
    tol = tolerance(z.precision_bits)
    heuristic = g >= 3
    ctx = z.ctx
    slack = ctx.mpf(2) ** (-(z.precision_bits - 10))

    for _ in range(max_iter):
        if g == 1:
            w = cur.entries[0][0]
            k = round_half_up(_to_fraction(w.real))
            if k:
                w = w - k
                gamma = _translation(1, [[-k]]) @ gamma
            if abs(w) ** 2 < 1 - slack:
                w = -1 / w
                gamma = ExactMatrix.from_ints([[0, -1], [1, 0]]) @ gamma
                cur = SiegelPoint(1, ((w,),), z.precision_bits)
                continue
            cur = SiegelPoint(1, ((w,),), z.precision_bits)
            break
        step = _reduce_imag(cur)
        if step is not None:
            cur = mobius_apply(step, cur)
            gamma = step @ gamma
        step = _reduce_real(cur)
        if step is not None:
            cur = mobius_apply(step, cur)
            gamma = step @ gamma
        if g == 2:
            val, inv = _min_inversion(cur)
            if val < 1 - tol:
                cur = mobius_apply(inv, cur)
                gamma = inv @ gamma
                continue
            break
        if abs(cur.entries[0][0]) < 1 - tol:
            inv = _quasi_inversion(g)
            cur = mobius_apply(inv, cur)
            gamma = inv @ gamma
            continue
        break
    else:
        raise ReductionFailedError(f"no convergence after {max_iter} iterations")

    direct = mobius_apply(gamma, z)
    residual = float(direct.distance(cur))
    if residual > tol * max(1.0, float(cur.scale())):
        raise PrecisionExhaustedError(f"reduction residual {residual:.3e} above tolerance")
    return ReductionCertificate(gamma, cur, height(gamma), residual, heuristic)


def fundamental_preimage(gamma1: ExactMatrix, s: SiegelPoint):
    """gamma = gamma2 gamma1^T with gamma2 reducing sigma(gamma1^T, s) to the fundamental domain.

    Returns ``(gamma, t, gamma2)``. Checks H(gamma) <= 2g H(gamma1) H(gamma2)
    exactly and sigma(gamma, s) = t numerically.
    """
    g = s.g
    t0 = mobius_apply(gamma1.T, s)
    red = reduce_to_fundamental(t0)
    gamma = red.gamma @ gamma1.T
    bound = 2 * g * height(gamma1) * red.gamma_height
    if height(gamma) > bound:
        raise AssertionError(f"H(gamma) = {height(gamma)} > {bound}")
    check = mobius_apply(gamma, s)
    tol = tolerance(s.precision_bits) * max(1.0, float(red.reduced.scale()))
    if float(check.distance(red.reduced)) > tol:
        raise PrecisionExhaustedError("sigma(gamma, s) drifted from the reduced point")
    return gamma, red.reduced, red.gamma


# -- text format ---------------------------------------------------------------------------

def point_to_text(z: SiegelPoint) -> str:
    digits = int(z.precision_bits * math.log10(2)) + 3
    ctx = z.ctx
    lines = [f"precision_bits={z.precision_bits}", str(z.g)]
    for r in z.entries:
        lines.append(" ".join(f"{ctx.nstr(x.real, digits)} {ctx.nstr(x.imag, digits)}" for x in r))
    return "\n".join(lines) + "\n"


def point_from_text(text: str) -> SiegelPoint:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("precision_bits="):
        raise ValueError("missing precision_bits header")
    bits = int(lines[0].split("=", 1)[1])
    g = int(lines[1])
    ctx = context(bits)
    rows = []
    for ln in lines[2:2 + g]:
        toks = ln.split()
        if len(toks) != 2 * g:
            raise ValueError(f"expected {2 * g} numbers per row")
        rows.append(tuple(ctx.mpc(ctx.mpf(toks[2 * k]), ctx.mpf(toks[2 * k + 1])) for k in range(g)))
    if len(rows) != g:
        raise ValueError("too few rows")
    return SiegelPoint(g, tuple(rows), bits)


def random_point(g: int, rng, precision_bits: int = DEFAULT_PRECISION_BITS,
                 re_range: float = 1.0, im_scale: float = 1.0) -> SiegelPoint:
    """Random point from a python ``random.Random``; entries are exact binary fractions."""
    ctx = context(precision_bits)
    X = [[0.0] * g for _ in range(g)]
    for i in range(g):
        for j in range(i, g):
            X[i][j] = X[j][i] = rng.uniform(-re_range, re_range)
    A = [[rng.uniform(-1, 1) for _ in range(g)] for _ in range(g)]
    Y = [[im_scale * (sum(A[k][i] * A[k][j] for k in range(g)) + (0.2 if i == j else 0.0))
          for j in range(g)] for i in range(g)]
    rows = tuple(tuple(ctx.mpc(X[i][j], Y[i][j]) for j in range(g)) for i in range(g))
    return SiegelPoint(g, rows, precision_bits)
