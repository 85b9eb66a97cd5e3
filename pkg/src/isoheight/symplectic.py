"""Symplectic forms on Z^2g and the constructive symplectic-basis algorithm.

The basis algorithm is the classical recursive one: pick e'_1, find e'_2 with
psi(e'_1, e'_2) = 1 from bounded Bezout coefficients, project the remaining
vectors onto the orthogonal complement of <e'_1, e'_2>, and recurse. Every
step checks its height against the a-priori bound and the result carries a
:class:`HeightCertificate`.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .errors import CertificateViolation, DimensionError, NotIntegralError, NotPerfectError
from .exact import ExactMatrix, det, height, xgcd
from .lattice import round_half_up, reduced_basis


def exponent_budget(g: int) -> int:
    """k(g) = (5^g - 1) / 2, the solution of k(g) = 2 + 5 k(g-1), k(0) = 0."""
    return (5 ** g - 1) // 2


def recursion_constant(g: int) -> int:
    """Constant C_g with final basis height <= C_g * N^k(g).

    Unrolls the recursion: a level of genus g produces coordinates bounded by
    (2g-2) * 2gN^2 * C_{g-1} * (4g^3 N^5)^k(g-1).
    """
    c = 1
    for h in range(2, g + 1):
        c = (2 * h - 2) * (2 * h) * c * (4 * h ** 3) ** exponent_budget(h - 1)
    return c


def _antisymmetric(rows) -> bool:
    n = len(rows)
    return all(rows[i][j] == -rows[j][i] for i in range(n) for j in range(i, n))


@dataclass(frozen=True)
class SymplecticForm:
    """Antisymmetric integral Gram matrix on Z^2g."""

    g: int
    gram: ExactMatrix

    def __post_init__(self):
        if self.gram.shape != (2 * self.g, 2 * self.g):
            raise DimensionError(f"gram must be {2 * self.g}x{2 * self.g}, got {self.gram.shape}")
        if not self.gram.is_integral():
            raise NotIntegralError("symplectic Gram matrix must be integral")
        if not _antisymmetric(self.gram.rows):
            raise ValueError("symplectic Gram matrix must be antisymmetric")

    @classmethod
    def from_gram(cls, gram) -> "SymplecticForm":
        gram = gram if isinstance(gram, ExactMatrix) else ExactMatrix(gram)
        if gram.nrows % 2:
            raise DimensionError("symplectic form needs even rank")
        return cls(gram.nrows // 2, gram)

    def pair(self, x, y) -> int:
        rows = self.gram.rows
        return sum(xi * rows[i][j] * yj for i, xi in enumerate(x) if xi for j, yj in enumerate(y) if yj)


@dataclass(frozen=True)
class BasisMatrix:
    """Unimodular change of basis; column k is the k-th new basis vector."""

    g: int
    cols: ExactMatrix

    def __post_init__(self):
        if self.cols.shape != (2 * self.g, 2 * self.g):
            raise DimensionError("basis matrix has wrong shape")
        if abs(det(self.cols)) != 1:
            raise ValueError("basis matrix is not unimodular")


@dataclass(frozen=True)
class StepBound:
    label: str
    bound: int
    observed: int


@dataclass
class HeightCertificate:
    input_bound_N: int
    step_bounds: list[StepBound] = field(default_factory=list)
    final_height: int = 0
    exponent_budget: int = 0
    constant: int = 1

    def check(self, label: str, bound: int, observed: int) -> None:
        self.step_bounds.append(StepBound(label, bound, observed))
        if observed > bound:
            raise CertificateViolation(f"{label}: observed {observed} > bound {bound}")

    @property
    def final_bound(self) -> int:
        return self.constant * self.input_bound_N ** self.exponent_budget

    def all_hold(self) -> bool:
        return all(s.observed <= s.bound for s in self.step_bounds)

    def to_dict(self) -> dict:
        return {
            "input_bound_N": str(self.input_bound_N),
            "step_bounds": [{"label": s.label, "bound": str(s.bound), "observed": str(s.observed)}
                            for s in self.step_bounds],
            "final_height": str(self.final_height),
            "exponent_budget": str(self.exponent_budget),
            "constant": str(self.constant),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "HeightCertificate":
        return cls(
            input_bound_N=int(d["input_bound_N"]),
            step_bounds=[StepBound(s["label"], int(s["bound"]), int(s["observed"]))
                         for s in d["step_bounds"]],
            final_height=int(d["final_height"]),
            exponent_budget=int(d["exponent_budget"]),
            constant=int(d.get("constant", "1")),
        )

    @classmethod
    def from_json(cls, text: str) -> "HeightCertificate":
        return cls.from_dict(json.loads(text))


def standard_J(g: int) -> SymplecticForm:
    """J = [[0, I_g], [-I_g, 0]]."""
    if g < 1:
        raise ValueError("genus must be >= 1")
    return SymplecticForm(g, ExactMatrix.from_ints(_J_rows(g)))


def _J_rows(g: int) -> list[list[int]]:
    n = 2 * g
    rows = [[0] * n for _ in range(n)]
    for i in range(g):
        rows[i][g + i] = 1
        rows[g + i][i] = -1
    return rows


def is_perfect(f: SymplecticForm) -> bool:
    return det(f.gram) == 1


# -- bounded Bezout -----------------------------------------------------------

def _pairwise_descent(a: list[int], v: list[int]) -> None:
    # Add kernel vectors (v_j/d) e_i - (v_i/d) e_j while the sum of squares drops.
    idx = [i for i, x in enumerate(v) if x]
    improved = True
    while improved:
        improved = False
        for s, i in enumerate(idx):
            for j in idx[s + 1:]:
                d = gcd(v[i], v[j])
                al, be = v[j] // d, v[i] // d
                ai, aj = a[i], a[j]
                denom = al * al + be * be
                t0 = Fraction(-(ai * al - aj * be), denom)
                best_t, best = 0, ai * ai + aj * aj
                for t in (t0.numerator // t0.denominator, -((-t0.numerator) // t0.denominator)):
                    val = (ai + t * al) ** 2 + (aj - t * be) ** 2
                    if val < best:
                        best_t, best = t, val
                if best_t:
                    a[i] = ai + best_t * al
                    a[j] = aj - best_t * be
                    improved = True


def _bezout(v: list[int]) -> list[int]:
    # unchecked: sum(a_i v_i) = gcd(v), coefficients made small but not certified
    a = [0] * len(v)
    acc = 0
    for k, vk in enumerate(v):
        if vk == 0:
            continue
        if acc == 0:
            acc = abs(vk)
            a[k] = 1 if vk > 0 else -1
            continue
        d, x, y = xgcd(acc, vk)
        # x*acc + y*vk = d; every solution is (x + t*vk/d, y - t*acc/d)
        t = round_half_up(Fraction(-x, vk // d))
        x, y = x + t * (vk // d), y - t * (acc // d)
        for i in range(k):
            a[i] *= x
        a[k] = y
        acc = d
    _pairwise_descent(a, v)
    return a


def bezout_bounded(v) -> list[int]:
    """Coefficients a with sum(a_i v_i) = 1 and every |a_i| <= max|v_i|.

    Runs a left-to-right two-term extended gcd, reducing each new pair of
    coefficients modulo the complementary value, then polishes the result by
    pairwise descent along kernel vectors. Zero entries of v get coefficient 0.
    """
    v = [int(x) for x in v]
    d = 0
    for x in v:
        d = gcd(d, x)
    if d != 1:
        raise ValueError(f"gcd of {v} is {d}, not 1")
    a = _bezout(v)
    assert sum(ai * vi for ai, vi in zip(a, v)) == 1
    bound = max(abs(x) for x in v)
    if max(abs(x) for x in a) > bound:
        raise CertificateViolation(f"bezout coefficients {a} exceed {bound}")
    return a


def _bezout_with_unit(v: list[int]) -> list[int] | None:
    """A bounded Bezout vector with some coefficient +-1, if one is found."""
    bound = max(abs(x) for x in v)
    a = _bezout(v)
    if max(abs(x) for x in a) <= bound and any(abs(x) == 1 for x in a):
        return a
    for j, vj in enumerate(v):
        if vj == 0:
            continue
        rest = [0 if i == j else x for i, x in enumerate(v)]
        d = 0
        for x in rest:
            d = gcd(d, x)
        if d == 0:
            continue
        for s in (1, -1):
            target = 1 - s * vj
            if target % d:
                continue
            b = [bi * (target // d) for bi in _bezout([x // d for x in rest])]
            b[j] = s
            _pairwise_descent(b, rest)
            if max(abs(x) for x in b) <= bound:
                assert sum(x * y for x, y in zip(b, v)) == 1
                return b
    return None


# -- symplectic basis ---------------------------------------------------------

def _apply(G: list[list[int]], x: list[int]) -> list[int]:
    return [sum(gr[j] * x[j] for j in range(len(x)) if x[j]) for gr in G]


def _basis_rec(G: list[list[int]], g: int, cert: HeightCertificate, depth: int) -> list[list[int]]:
    """Return 2g vectors (pairs x1, y1, x2, y2, ...) in the coordinates of G's basis."""
    if g == 0:
        return []
    n = 2 * g
    N = max(abs(x) for r in G for x in r)
    tag = f"level{depth}(g={g})"

    pivot, a, drop = 0, None, None
    for p in range(n):
        cand = _bezout_with_unit(list(G[p]))
        if cand is not None:
            pivot, a = p, cand
            drop = next(i for i, x in enumerate(a) if abs(x) == 1)
            break
    if a is None:
        a = _bezout(list(G[0]))
    e1 = [int(i == pivot) for i in range(n)]
    e2 = a
    if sum(G[pivot][i] * a[i] for i in range(n)) != 1:
        raise CertificateViolation(f"{tag}: psi(e1', e2') != 1")
    cert.check(f"{tag}:H(e2')<=N", N, max(abs(x) for x in e2))
    if g == 1:
        return [e1, e2]

    v = G[pivot]                        # psi(e1', e_i)
    w = [sum(a[k] * G[k][i] for k in range(n) if a[k]) for i in range(n)]  # psi(e2', e_i)

    def project(i: int) -> list[int]:
        x = [-v[i] * ak for ak in a]
        x[i] += 1
        x[pivot] += w[i]
        return x

    if drop is not None:
        rest = [project(i) for i in range(n) if i != pivot and i != drop]
    else:
        rest = reduced_basis([project(i) for i in range(n) if i != pivot])
    if len(rest) != n - 2:
        raise CertificateViolation(f"{tag}: orthogonal complement has rank {len(rest)}")
    h_rest = max(abs(x) for r in rest for x in r)
    cert.check(f"{tag}:H(e_i')<=2gN^2", 2 * g * N * N, h_rest)

    sub = [[sum(x * y for x, y in zip(r, _apply(G, s))) for s in rest] for r in rest]
    n_sub = max(abs(x) for r in sub for x in r)
    cert.check(f"{tag}:pairing<=4g^3N^5", 4 * g ** 3 * N ** 5, n_sub)

    coords = _basis_rec(sub, g - 1, cert, depth + 1)
    out = [e1, e2]
    for c in coords:
        out.append([sum(c[k] * rest[k][t] for k in range(n - 2)) for t in range(n)])
    return out


def symplectic_basis(f: SymplecticForm) -> tuple[BasisMatrix, HeightCertificate]:
    """Find B with B^T gram B = J, certifying each step's height bound.

    Raises NotPerfectError if det(gram) != 1 and CertificateViolation if any
    step exceeds its bound (which would be a bug).
    """
    d = det(f.gram)
    if d != 1:
        raise NotPerfectError(d)
    g = f.g
    G = [list(r) for r in f.gram.rows]
    N = max(abs(x) for r in G for x in r)
    cert = HeightCertificate(input_bound_N=N, exponent_budget=exponent_budget(g),
                             constant=recursion_constant(g))
    vecs = _basis_rec(G, g, cert, 0)
    cols = vecs[0::2] + vecs[1::2]
    B = ExactMatrix.from_ints([[cols[k][i] for k in range(2 * g)] for i in range(2 * g)])
    if B.T @ f.gram @ B != standard_J(g).gram:
        raise CertificateViolation("B^T psi B != J")
    cert.final_height = height(B)
    cert.check("final:H(B)<=C*N^k", cert.final_bound, cert.final_height)
    return BasisMatrix(g, B), cert


# -- GSp membership and generators ------------------------------------------

def gsp_multiplier(m: ExactMatrix, g: int):
    """Return nu if m^T J m = nu J with nu != 0, else None."""
    if m.shape != (2 * g, 2 * g):
        raise DimensionError(f"expected {2 * g}x{2 * g}, got {m.shape}")
    J = standard_J(g).gram
    P = m.T @ J @ m
    nu = P[0, g]
    if nu == 0 or P != J.scale(nu):
        return None
    return nu


def _mul_int(a, b):
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(r, c)) for c in bt] for r in a]


def _sp_generator(g: int, rng: random.Random) -> list[list[int]]:
    n = 2 * g
    kind = rng.randrange(3)
    if kind == 0:
        return _J_rows(g)
    M = [[int(i == j) for j in range(n)] for i in range(n)]
    if kind == 1:
        for i in range(g):
            for j in range(i, g):
                s = rng.choice((-1, 0, 1))
                M[i][g + j] = s
                M[j][g + i] = s
        return M
    if g == 1:
        # no off-diagonal elementary U in GL_1; use -I
        return [[-1, 0], [0, -1]]
    i, j = rng.sample(range(g), 2)
    t = rng.choice((-1, 1))
    # U = I + t E_ij; top-left U^T, bottom-right U^{-1} = I - t E_ij
    M[j][i] = t
    M[g + i][g + j] = -t
    return M


def random_sp(g: int, word_len: int, seed: int) -> ExactMatrix:
    """Deterministic product of ``word_len`` random generators of Sp_2g(Z)."""
    if word_len < 0:
        raise ValueError("word_len must be >= 0")
    rng = random.Random(seed)
    M = [[int(i == j) for j in range(2 * g)] for i in range(2 * g)]
    for _ in range(word_len):
        M = _mul_int(M, _sp_generator(g, rng))
    return ExactMatrix.from_ints(M)


def random_perfect_form(g: int, budget: int, seed: int, max_steps: int = 400):
    """Random perfect form U^T J U with every |entry| <= budget.

    U is grown by random elementary column operations, rejecting any that
    would push an entry past ``budget``; generation stops after a run of
    consecutive rejections. Returns ``(form, U)``.
    """
    rng = random.Random(seed)
    n = 2 * g
    G = _J_rows(g)
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    misses = 0
    for _ in range(max_steps):
        i, j = rng.sample(range(n), 2)
        t = rng.choice((-2, -1, 1, 2))
        # column i += t * column j  (E = I + t E_ji): G <- E^T G E
        newG = [r[:] for r in G]
        for r in newG:
            r[i] += t * r[j]
        newG[i] = [x + t * y for x, y in zip(newG[i], newG[j])]
        if max(abs(x) for r in newG for x in r) > budget:
            misses += 1
            if misses >= 8:
                break
            continue
        misses = 0
        G = newG
        for r in U:
            r[i] += t * r[j]
    return SymplecticForm(g, ExactMatrix.from_ints(G)), ExactMatrix.from_ints(U)
