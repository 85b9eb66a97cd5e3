"""Unit reduction of symmetric positive elements in concrete involutive orders.

Supported rings:

* ``M_n(Z)`` with transpose as involution, faithful representation the
  inclusion into n x n integer matrices;
* quadratic orders Z[w] of discriminant D (D = 0 or 1 mod 4, not a square),
  with w = sqrt(D/4) or (1 + sqrt(D))/2; the involution is the identity for
  D > 0 and complex conjugation for D < 0, and the representation is the
  regular one on the basis (1, w).

For symmetric positive definite q we find a unit u with H(u^dag q u) bounded
by a ring constant times Nm(q).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import mpmath

from .errors import NotSymmetricPositiveError
from .exact import ExactMatrix, det, height
from .lattice import DEFAULT_DELTA, lll_gram


@dataclass(frozen=True)
class EndRingDesc:
    kind: str          # "matrix" or "quadratic"
    n: int = 0         # matrix size
    D: int = 0         # discriminant

    def __post_init__(self):
        if self.kind == "matrix":
            if self.n < 1:
                raise ValueError("matrix ring size must be >= 1")
        elif self.kind == "quadratic":
            D = self.D
            if D % 4 not in (0, 1):
                raise ValueError(f"{D} is not a discriminant (must be 0 or 1 mod 4)")
            if D >= 0 and isqrt(D) ** 2 == D:
                raise ValueError(f"discriminant {D} is a square")
        else:
            raise ValueError(f"unknown ring kind {self.kind!r}")

    @classmethod
    def matrix(cls, n: int) -> "EndRingDesc":
        return cls("matrix", n=n)

    @classmethod
    def quadratic(cls, D: int) -> "EndRingDesc":
        return cls("quadratic", D=D)

    @classmethod
    def from_json(cls, spec) -> "EndRingDesc":
        d = json.loads(spec) if isinstance(spec, str) else dict(spec)
        if d.get("kind") == "matrix":
            return cls.matrix(int(d["n"]))
        if d.get("kind") == "quadratic":
            return cls.quadratic(int(d["D"]))
        raise ValueError(f"bad ring descriptor {d!r}")

    def to_json(self) -> str:
        if self.kind == "matrix":
            return json.dumps({"kind": "matrix", "n": self.n})
        return json.dumps({"kind": "quadratic", "D": self.D})

    @property
    def involution(self) -> str:
        if self.kind == "matrix":
            return "transpose"
        return "identity" if self.D > 0 else "conjugation"

    @property
    def rho_dim(self) -> int:
        return self.n if self.kind == "matrix" else 2

    @property
    def trace_w(self) -> int:
        """t in w^2 = t w + m."""
        return self.D % 4

    @property
    def norm_w(self) -> int:
        """m in w^2 = t w + m."""
        return (self.D - self.D % 4) // 4

    def one(self) -> "RingElem":
        if self.kind == "matrix":
            return RingElem(self, tuple(int(i == j) for i in range(self.n) for j in range(self.n)))
        return RingElem(self, (1, 0))


@dataclass(frozen=True)
class RingElem:
    """Element of a supported order, in integral coordinates.

    Matrix rings: row-major entries. Quadratic orders: (a, b) for a + b w.
    """

    ring: EndRingDesc
    coords: tuple

    def __post_init__(self):
        size = self.ring.n ** 2 if self.ring.kind == "matrix" else 2
        if len(self.coords) != size:
            raise ValueError(f"expected {size} coordinates")
        if not all(isinstance(c, int) for c in self.coords):
            raise ValueError("coordinates must be integers")

    @classmethod
    def from_matrix(cls, rows) -> "RingElem":
        rows = [list(r) for r in rows]
        return cls(EndRingDesc.matrix(len(rows)), tuple(int(x) for r in rows for x in r))

    def matrix(self) -> ExactMatrix:
        n = self.ring.n
        return ExactMatrix.from_ints([self.coords[i * n:(i + 1) * n] for i in range(n)])

    def rho(self) -> ExactMatrix:
        """Faithful integral representation."""
        if self.ring.kind == "matrix":
            return self.matrix()
        a, b = self.coords
        t, m = self.ring.trace_w, self.ring.norm_w
        # columns: x * 1 = a + b w, x * w = b m + (a + b t) w
        return ExactMatrix.from_ints([[a, b * m], [b, a + b * t]])

    def __mul__(self, other: "RingElem") -> "RingElem":
        if self.ring != other.ring:
            raise ValueError("ring mismatch")
        if self.ring.kind == "matrix":
            return RingElem(self.ring, tuple((self.matrix() @ other.matrix()).entries()))
        a, b = self.coords
        c, d = other.coords
        t, m = self.ring.trace_w, self.ring.norm_w
        return RingElem(self.ring, (a * c + b * d * m, a * d + b * c + b * d * t))

    def dagger(self) -> "RingElem":
        """Rosati involution."""
        if self.ring.kind == "matrix":
            return RingElem(self.ring, tuple(self.matrix().T.entries()))
        if self.ring.D > 0:
            return self
        return self.conjugate()

    def conjugate(self) -> "RingElem":
        a, b = self.coords
        return RingElem(self.ring, (a + b * self.ring.trace_w, -b))

    def __pow__(self, k: int) -> "RingElem":
        if k < 0:
            return inverse_unit(self) ** (-k)
        out = self.ring.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def height(self) -> int:
        return height(self.rho())


def norm(x: RingElem) -> int:
    """Nm(x) = det rho(x)."""
    return det(x.rho())


def inverse_unit(u: RingElem) -> RingElem:
    nm = norm(u)
    if abs(nm) != 1:
        raise ValueError("not a unit")
    if u.ring.kind == "matrix":
        from .exact import adjugate
        return RingElem(u.ring, tuple(adjugate(u.matrix()).scale(nm).entries()))
    c = u.conjugate()
    return RingElem(u.ring, tuple(nm * x for x in c.coords))


# -- exact signs of real quadratic numbers ---------------------------------------------

def _sign_surd(p: int, q: int, D: int) -> int:
    """Sign of p + q sqrt(D), D > 0 non-square."""
    if q == 0:
        return (p > 0) - (p < 0)
    if p == 0:
        return (q > 0) - (q < 0)
    if (p > 0) == (q > 0):
        return 1 if p > 0 else -1
    # opposite signs: compare p^2 with q^2 D
    if p * p > q * q * D:
        return 1 if p > 0 else -1
    return 1 if q > 0 else -1


def _embedding_parts(x: RingElem, which: int) -> tuple[int, int]:
    """(P, Q) with embedding = (P + Q sqrt(D)) / 2; which = 0 takes +sqrt(D)."""
    a, b = x.coords
    t = x.ring.trace_w
    return 2 * a + b * t, b if which == 0 else -b


def _local_ctx(bits: int = 128):
    # private context per call; the global mpmath one is shared state
    ctx = mpmath.MPContext()
    ctx.prec = bits
    return ctx


def embeddings(x: RingElem, ctx=None):
    """Both real embeddings as mpmath numbers (ordered +sqrt, -sqrt)."""
    ctx = ctx or _local_ctx()
    r = ctx.sqrt(x.ring.D)
    out = []
    for w in (0, 1):
        P, Q = _embedding_parts(x, w)
        out.append((P + Q * r) / 2)
    return out


def _larger_embedding(x: RingElem) -> tuple[int, int]:
    # x_0 - x_1 = b sqrt(D)
    return _embedding_parts(x, 0 if x.coords[1] >= 0 else 1)


def _compare_embedded(u: tuple[int, int], v: tuple[int, int], D: int) -> int:
    return _sign_surd(u[0] - v[0], u[1] - v[1], D)


# -- predicates and units ---------------------------------------------------------------

def is_symmetric_positive(q: RingElem) -> bool:
    ring = q.ring
    if ring.kind == "matrix":
        m = q.matrix()
        if m != m.T:
            return False
        return all(det(m.submatrix(0, k, 0, k)) > 0 for k in range(1, ring.n + 1))
    if ring.D > 0:
        return all(_sign_surd(*_embedding_parts(q, w), ring.D) > 0 for w in (0, 1))
    a, b = q.coords
    return b == 0 and a > 0


def fundamental_unit(D: int) -> RingElem:
    """Fundamental unit (> 1 in the +sqrt embedding) of the real quadratic order of discriminant D.

    Walks the continued fraction of w = (t + sqrt(D))/2; the first convergent
    p/q with p - q w a unit gives it.
    """
    if D <= 0:
        raise ValueError("fundamental_unit needs D > 0")
    ring = EndRingDesc.quadratic(D)
    t = ring.trace_w
    s = isqrt(D)
    # alpha = (P + sqrt(D)) / Q
    P, Q = t, 2
    p_prev, p = 1, None
    q_prev, q = 0, None
    for _ in range(10 * D + 100):
        a = (P + s) // Q if Q > 0 else -((P + s) // -Q + 1)
        if p is None:
            p, q = a, 1
        else:
            p, p_prev = a * p + p_prev, p
            q, q_prev = a * q + q_prev, q
        u = RingElem(ring, (p, -q))
        if abs(norm(u)) == 1:
            eps = u.conjugate()
            assert _sign_surd(*_embedding_parts(eps, 0), D) > 0
            return eps
        P = a * Q - P
        Q = (D - P * P) // Q
    raise RuntimeError(f"no unit found for D={D}")


def units_imaginary(D: int) -> list[RingElem]:
    ring = EndRingDesc.quadratic(D)
    if D == -4:
        coords = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    elif D == -3:
        coords = [(1, 0), (-1, 0), (0, 1), (0, -1), (-1, 1), (1, -1)]
    else:
        coords = [(1, 0), (-1, 0)]
    return [RingElem(ring, c) for c in coords]


# -- reduction -------------------------------------------------------------------------

def matrix_ring_constant(n: int, delta: Fraction = DEFAULT_DELTA) -> Fraction:
    """c with max|entry| <= c det(q) after LLL: (1/(delta - 1/4))^(n(n-1)/2)."""
    alpha = 1 / (delta - Fraction(1, 4))
    return alpha ** (n * (n - 1) // 2)


def real_quadratic_bound(q_norm: int, D: int) -> int:
    """Upper bound for H(q') when both embeddings of q' lie within a factor eps^2.

    Both embeddings are then at most eps * sqrt(Nm q); the coordinates and
    the regular representation follow.
    """
    mp = _local_ctx()
    eps = fundamental_unit(D)
    e1 = max(embeddings(eps, mp))
    r = mp.sqrt(D)
    M = e1 * mp.sqrt(q_norm)
    ring = EndRingDesc.quadratic(D)
    w1 = (ring.trace_w + r) / 2
    bmax = 2 * M / r
    amax = M + bmax * abs(w1)
    entries = max(amax, amax + bmax * ring.trace_w, bmax * abs(ring.norm_w))
    return int(mp.ceil(entries)) + 1


def reduce_symmetric(q: RingElem) -> tuple[RingElem, RingElem]:
    """Unit u with q' = u^dag q u small. Returns (u, q')."""
    if not is_symmetric_positive(q):
        raise NotSymmetricPositiveError(f"{q.coords} is not symmetric positive definite")
    ring = q.ring
    if ring.kind == "matrix":
        U, G = lll_gram([list(r) for r in q.matrix().rows])
        u = RingElem(ring, tuple(x for r in U for x in r))
        qr = RingElem(ring, tuple(int(x) for r in G for x in r))
    elif ring.D > 0:
        u = _balance_real(q)
        qr = u.dagger() * q * u
    else:
        best = None
        for v in units_imaginary(ring.D):
            cand = v.dagger() * q * v
            if best is None or cand.height() < best[1].height():
                best = (v, cand)
        u, qr = best
    assert qr == u.dagger() * q * u
    assert norm(qr) == norm(q)
    assert abs(norm(u)) == 1
    return u, qr


def _balance_real(q: RingElem) -> RingElem:
    """eps^m minimising the larger embedding of q eps^(2m); ties go to smaller |m|."""
    mp = _local_ctx()
    D = q.ring.D
    eps = fundamental_unit(D)
    e_hi, _ = embeddings(eps, mp)
    x0, x1 = embeddings(q, mp)
    m0 = int(mp.nint(-mp.log(x0 / x1) / (4 * mp.log(abs(e_hi)))))
    eps2 = eps * eps
    eps2_inv = inverse_unit(eps2)

    def key(m):
        return _larger_embedding(q * (eps2 ** m if m >= 0 else eps2_inv ** (-m)))

    m = m0
    cur = key(m)
    for direction in (1, -1):
        while True:
            nxt = key(m + direction)
            if _compare_embedded(nxt, cur, D) < 0:
                m, cur = m + direction, nxt
            else:
                break
    # tie with a neighbour: take the smaller |m|
    for nb in (m - 1, m + 1):
        if abs(nb) < abs(m) and _compare_embedded(key(nb), cur, D) == 0:
            m = nb
            cur = key(m)
    return eps ** m
