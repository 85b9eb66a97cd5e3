"""Exact rational matrices: heights, products, determinants, Hermite form, inverses.

Entries are Python ints or :class:`fractions.Fraction` values in lowest terms.
A fraction with denominator 1 is stored as an int so that integer matrices run
on plain int arithmetic.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

from .errors import DimensionError, NotIntegralError, SingularMatrixError

Scalar = "int | Fraction"


def as_scalar(x) -> int | Fraction:
    """Normalise a rational input to int or Fraction (denominator > 1)."""
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, Rational):
        return as_scalar(Fraction(x.numerator, x.denominator))
    if isinstance(x, str):
        return as_scalar(Fraction(x))
    raise TypeError(f"not an exact rational: {x!r}")


def scalar_height(x) -> int:
    """Multiplicative height max(|p|, q) of p/q in lowest terms; H(0) = 1."""
    if isinstance(x, int):
        return abs(x) or 1
    x = Fraction(x)
    return max(abs(x.numerator), x.denominator, 1)


class ExactMatrix:
    """Immutable dense matrix over Q."""

    __slots__ = ("_rows", "nrows", "ncols")

    def __init__(self, rows: Iterable[Iterable]):
        data = tuple(tuple(as_scalar(x) for x in row) for row in rows)
        ncols = len(data[0]) if data else 0
        if any(len(r) != ncols for r in data):
            raise DimensionError("ragged rows")
        self._rows = data
        self.nrows = len(data)
        self.ncols = ncols

    @classmethod
    def _trusted(cls, rows: tuple) -> "ExactMatrix":
        # rows already normalised tuples
        m = object.__new__(cls)
        m._rows = rows
        m.nrows = len(rows)
        m.ncols = len(rows[0]) if rows else 0
        return m

    @classmethod
    def from_ints(cls, rows) -> "ExactMatrix":
        return cls._trusted(tuple(tuple(int(x) for x in r) for r in rows))

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls._trusted(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, r: int, c: int) -> "ExactMatrix":
        return cls._trusted(tuple((0,) * c for _ in range(r)))

    @classmethod
    def diag(cls, entries: Sequence) -> "ExactMatrix":
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_blocks(cls, a, b, c, d) -> "ExactMatrix":
        """Assemble [[a, b], [c, d]] from four blocks."""
        a, b, c, d = (x if isinstance(x, ExactMatrix) else ExactMatrix(x) for x in (a, b, c, d))
        if a.nrows != b.nrows or c.nrows != d.nrows or a.ncols != c.ncols or b.ncols != d.ncols:
            raise DimensionError("block shapes do not line up")
        top = tuple(ra + rb for ra, rb in zip(a._rows, b._rows))
        bottom = tuple(rc + rd for rc, rd in zip(c._rows, d._rows))
        return cls._trusted(top + bottom)

    # -- access -----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    @property
    def rows(self) -> tuple:
        return self._rows

    def __getitem__(self, ij):
        i, j = ij
        return self._rows[i][j]

    def row(self, i: int) -> tuple:
        return self._rows[i]

    def col(self, j: int) -> tuple:
        return tuple(r[j] for r in self._rows)

    def entries(self) -> list:
        """Row-major flat list."""
        return [x for r in self._rows for x in r]

    def tolist(self) -> list[list]:
        return [list(r) for r in self._rows]

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> "ExactMatrix":
        return ExactMatrix._trusted(tuple(r[c0:c1] for r in self._rows[r0:r1]))

    def blocks(self) -> tuple["ExactMatrix", "ExactMatrix", "ExactMatrix", "ExactMatrix"]:
        """Split a 2g x 2g matrix into its g x g blocks (A, B, C, D)."""
        if self.nrows != self.ncols or self.nrows % 2:
            raise DimensionError("blocks() needs an even square matrix")
        g = self.nrows // 2
        n = 2 * g
        return (self.submatrix(0, g, 0, g), self.submatrix(0, g, g, n),
                self.submatrix(g, n, 0, g), self.submatrix(g, n, g, n))

    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def is_integral(self) -> bool:
        return all(isinstance(x, int) for r in self._rows for x in r)

    # -- arithmetic -------------------------------------------------------
    def transpose(self) -> "ExactMatrix":
        return ExactMatrix._trusted(tuple(zip(*self._rows)) if self._rows else ())

    T = property(transpose)

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        return mat_mul(self, other)

    def _same_shape(self, other):
        if self.shape != other.shape:
            raise DimensionError(f"shape {self.shape} vs {other.shape}")

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        self._same_shape(other)
        return ExactMatrix._trusted(tuple(
            tuple(as_scalar(x + y) for x, y in zip(r, s)) for r, s in zip(self._rows, other._rows)))

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        self._same_shape(other)
        return ExactMatrix._trusted(tuple(
            tuple(as_scalar(x - y) for x, y in zip(r, s)) for r, s in zip(self._rows, other._rows)))

    def __neg__(self) -> "ExactMatrix":
        return ExactMatrix._trusted(tuple(tuple(-x for x in r) for r in self._rows))

    def scale(self, c) -> "ExactMatrix":
        c = as_scalar(c)
        return ExactMatrix._trusted(tuple(tuple(as_scalar(c * x) for x in r) for r in self._rows))

    def __mul__(self, c):
        if isinstance(c, ExactMatrix):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self._rows == other._rows

    def __hash__(self) -> int:
        return hash(self._rows)

    def __repr__(self) -> str:
        return f"ExactMatrix({self.tolist()!r})"

    def __str__(self) -> str:
        return to_text(self)


def height(m: ExactMatrix) -> int:
    """Max multiplicative height of the entries (1 for the zero or empty matrix)."""
    return max((scalar_height(x) for r in m.rows for x in r), default=1)


def _int_product(a_rows, b_cols):
    return tuple(tuple(sum(x * y for x, y in zip(r, c)) for c in b_cols) for r in a_rows)


def product_height_bound(a: ExactMatrix, b: ExactMatrix) -> int:
    """Proven upper bound for H(ab)."""
    n = max(a.ncols, 1)
    hh = height(a) * height(b)
    if a.is_integral() and b.is_integral():
        return n * hh
    # n terms, each of height <= hh; the common denominator is at most hh^n
    return n * hh ** n


def mat_mul(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    """Exact product a @ b.

    Under assertions the product-height bound is checked on every call:
    H(ab) <= n H(a) H(b) (n = inner dimension) for integer matrices. With
    proper fractions that inequality is false ([1, 1] times [2, 1/2]^T is
    5/2), so there the weaker n (H(a) H(b))^n is checked instead.
    """
    if a.ncols != b.nrows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    b_cols = tuple(zip(*b.rows)) if b.rows else ((),) * 0
    if a.is_integral() and b.is_integral():
        out = ExactMatrix._trusted(_int_product(a.rows, b_cols) if b.ncols else tuple(() for _ in a.rows))
    else:
        out = ExactMatrix._trusted(tuple(
            tuple(as_scalar(sum((x * y for x, y in zip(r, c)), 0)) for c in b_cols)
            if b.ncols else () for r in a.rows))
    assert height(out) <= product_height_bound(a, b), "product height bound violated"
    return out


def det(m: ExactMatrix) -> int | Fraction:
    """Determinant by fraction-free (Bareiss) elimination."""
    if not m.is_square():
        raise DimensionError(f"det of non-square {m.shape}")
    n = m.nrows
    if n == 0:
        return 1
    denom = 1
    if not m.is_integral():
        # clear denominators so the elimination stays in Z
        for r in m.rows:
            for x in r:
                if isinstance(x, Fraction):
                    denom = denom * x.denominator // _gcd(denom, x.denominator)
        a = [[int(x * denom) for x in r] for r in m.rows]
    else:
        a = [list(r) for r in m.rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    d = sign * a[n - 1][n - 1]
    if denom != 1:
        return as_scalar(Fraction(d, denom ** n))
    return d


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (d, x, y) with a*x + b*y = d = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        return -a, -x0, -y0
    return a, x0, y0


def hnf(m: ExactMatrix) -> tuple[ExactMatrix, ExactMatrix]:
    """Column-style Hermite normal form.

    Returns ``(h, u)`` with ``h = m @ u``, ``u`` unimodular, ``h`` upper
    triangular with positive diagonal and ``0 <= h[i][j] < h[i][i]`` for
    ``j > i``. Since the diagonal multiplies to ``|det m|``, every entry is
    at most ``|det m|``.
    """
    if not m.is_square():
        raise DimensionError("hnf needs a square matrix")
    if not m.is_integral():
        raise NotIntegralError("hnf needs an integer matrix")
    n = m.nrows
    d = det(m)
    if d == 0:
        raise SingularMatrixError("hnf of a singular matrix")
    h = [list(r) for r in m.rows]
    u = [[int(i == j) for j in range(n)] for i in range(n)]

    def combine(i: int, j: int, x: int, y: int, p: int, q: int) -> None:
        # (col_i, col_j) <- (x col_i + y col_j, p col_i + q col_j), det = xq - yp = 1
        for mat in (h, u):
            for r in mat:
                ci, cj = r[i], r[j]
                r[i] = x * ci + y * cj
                r[j] = p * ci + q * cj

    for i in range(n - 1, -1, -1):
        for j in range(i):
            b = h[i][j]
            if b == 0:
                continue
            a = h[i][i]
            g, x, y = xgcd(a, b)
            combine(i, j, x, y, -b // g, a // g)
        if h[i][i] < 0:
            for mat in (h, u):
                for r in mat:
                    r[i] = -r[i]
        piv = h[i][i]
        if piv == 0:
            raise SingularMatrixError("zero pivot in hnf")
        for j in range(i + 1, n):
            q = h[i][j] // piv
            if q:
                for mat in (h, u):
                    for r in mat:
                        r[j] -= q * r[i]
    H = ExactMatrix.from_ints(h)
    U = ExactMatrix.from_ints(u)
    assert height(H) <= abs(d), "hnf entry exceeds |det|"
    return H, U


def adjugate_inverse(m: ExactMatrix) -> ExactMatrix:
    """Exact inverse by Gauss-Jordan over Q."""
    if not m.is_square():
        raise DimensionError("inverse of a non-square matrix")
    n = m.nrows
    a = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)]
         for i, r in enumerate(m.rows)]
    for k in range(n):
        p = next((i for i in range(k, n) if a[i][k] != 0), None)
        if p is None:
            raise SingularMatrixError("matrix is singular")
        a[k], a[p] = a[p], a[k]
        inv = 1 / a[k][k]
        a[k] = [x * inv for x in a[k]]
        for i in range(n):
            if i != k and a[i][k] != 0:
                f = a[i][k]
                rk = a[k]
                a[i] = [x - f * y for x, y in zip(a[i], rk)]
    return ExactMatrix([r[n:] for r in a])


def adjugate(m: ExactMatrix) -> ExactMatrix:
    """det(m) * m^-1; integral whenever m is."""
    return adjugate_inverse(m).scale(det(m))


# -- text format ------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    return f"{x.numerator}/{x.denominator}"


def to_text(m: ExactMatrix) -> str:
    """Serialise as "rows cols" followed by one line per row."""
    lines = [f"{m.nrows} {m.ncols}"]
    lines.extend(" ".join(_fmt(x) for x in r) for r in m.rows)
    return "\n".join(lines) + "\n"


def from_text(text: str) -> ExactMatrix:
    m, rest = read_matrix(text.splitlines())
    if any(line.strip() for line in rest):
        raise ValueError("trailing data after matrix")
    return m


def read_matrix(lines: Sequence[str]) -> tuple[ExactMatrix, list[str]]:
    """Parse one matrix from the front of ``lines``; return it and the rest."""
    lines = list(lines)
    while lines and not lines[0].strip():
        lines.pop(0)
    if not lines:
        raise ValueError("missing matrix header")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"bad matrix header {lines[0]!r}")
    r, c = int(head[0]), int(head[1])
    if r < 0 or c < 0 or len(lines) < r + 1:
        raise ValueError("matrix body too short")
    rows = []
    for line in lines[1:r + 1]:
        toks = line.split()
        if len(toks) != c:
            raise ValueError(f"expected {c} entries, got {len(toks)}")
        rows.append([_parse_entry(t) for t in toks])
    if r == 0:
        return ExactMatrix._trusted(()), lines[1:]
    return ExactMatrix(rows), lines[r + 1:]


def _parse_entry(tok: str) -> int | Fraction:
    if "/" in tok:
        p, q = tok.split("/")
        q = int(q)
        if q <= 0:
            raise ValueError(f"denominator must be positive: {tok}")
        return as_scalar(Fraction(int(p), q))
    return int(tok)
