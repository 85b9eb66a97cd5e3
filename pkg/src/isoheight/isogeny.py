"""Rational representations of isogenies between polarised lattices.

An isogeny is modelled at lattice level: an integer matrix ``F`` (the map on
H_1 from the domain lattice to the codomain lattice) together with the
perfect symplectic forms on both sides.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import CertificateViolation, DimensionError, NotIntegralError, NotPerfectError
from .exact import ExactMatrix, adjugate_inverse, det, height, hnf, read_matrix, to_text
from .symplectic import (
    BasisMatrix,
    HeightCertificate,
    SymplecticForm,
    gsp_multiplier,
    is_perfect,
    random_sp,
    standard_J,
    symplectic_basis,
)


@dataclass(frozen=True)
class IsogenyRep:
    """Matrix of f_* : H_1(domain) -> H_1(codomain) plus the two forms.

    ``codomain_form`` is psi, ``domain_form`` is psi'.
    """

    g: int
    matrix: ExactMatrix
    codomain_form: SymplecticForm
    domain_form: SymplecticForm

    def __post_init__(self):
        n = 2 * self.g
        if self.matrix.shape != (n, n):
            raise DimensionError(f"isogeny matrix must be {n}x{n}")
        if not self.matrix.is_integral():
            raise NotIntegralError("isogeny matrix must be integral")
        if det(self.matrix) == 0:
            raise ValueError("isogeny matrix is singular")
        for form in (self.codomain_form, self.domain_form):
            if form.g != self.g:
                raise DimensionError("form genus does not match")
            if not is_perfect(form):
                raise NotPerfectError(det(form.gram))

    @classmethod
    def standard(cls, matrix) -> "IsogenyRep":
        """Rep with both forms the standard J."""
        matrix = matrix if isinstance(matrix, ExactMatrix) else ExactMatrix(matrix)
        g = matrix.nrows // 2
        J = standard_J(g)
        return cls(g, matrix, J, J)


@dataclass
class PipelineResult:
    domain_basis: BasisMatrix
    rep_in_new_bases: ExactMatrix
    hnf_height: int
    final_height: int
    degree: int
    certificate: HeightCertificate
    certified_bound: int


def degree(f: IsogenyRep) -> int:
    return abs(det(f.matrix))


def opposite_isogeny(f: IsogenyRep) -> IsogenyRep:
    """Isogeny the other way with F F' = n I; its degree is n^(2g-1)."""
    n = degree(f)
    fp = adjugate_inverse(f.matrix).scale(n)
    if not fp.is_integral():
        raise AssertionError("n F^-1 is not integral")
    return IsogenyRep(f.g, fp, f.domain_form, f.codomain_form)


def pullback_form(f: IsogenyRep) -> ExactMatrix:
    """Gram matrix of f^* psi on the domain: F^T psi F."""
    return f.matrix.T @ f.codomain_form.gram @ f.matrix


def twisted_pullback_form(f: IsogenyRep, q: ExactMatrix) -> ExactMatrix:
    """Gram of (x, y) -> psi(F x, Q F y); equals n^2 psi' when Q is the twist q'_*."""
    return f.matrix.T @ f.codomain_form.gram @ q @ f.matrix


def polarisation_endomorphism(h: IsogenyRep) -> ExactMatrix:
    """Q with h^* psi_cod = psi_dom(., Q .), i.e. Q = psi_dom^-1 H^T psi_cod H.

    This is the rational representation of q in h^* lambda' = lambda o q.
    """
    psi_dom = h.domain_form.gram
    q = adjugate_inverse(psi_dom) @ h.matrix.T @ h.codomain_form.gram @ h.matrix
    return q


def is_polarized(f: IsogenyRep) -> bool:
    J = standard_J(f.g)
    if f.codomain_form != J or f.domain_form != J:
        raise ValueError("is_polarized needs both forms in standard position")
    nu = gsp_multiplier(f.matrix, f.g)
    return nu is not None and isinstance(nu, int) and nu != 0


def _divisor_matrix(g: int, divisors, n: int) -> ExactMatrix:
    divisors = list(divisors)
    if len(divisors) != g or any(d <= 0 for d in divisors):
        raise ValueError(f"need {g} positive divisors, got {divisors}")
    if n <= 0:
        raise ValueError("n must be positive")
    for a, b in zip(divisors, divisors[1:]):
        if b % a:
            raise ValueError(f"divisor chain broken: {a} does not divide {b}")
    if any(n % d for d in divisors):
        raise ValueError(f"every divisor must divide n={n}")
    return ExactMatrix.diag(divisors + [n // d for d in divisors])


def generate_polarized_isogeny(g: int, divisors, n: int, word_len: int, seed: int) -> IsogenyRep:
    """gamma1 D gamma2 with D = diag(d_1..d_g, n/d_1..n/d_g) and gamma_i in Sp_2g(Z).

    The result has symplectic multiplier n and degree n^g.
    """
    D = _divisor_matrix(g, divisors, n)
    rng = random.Random(seed)
    s1, s2 = rng.getrandbits(64), rng.getrandbits(64)
    m = random_sp(g, word_len, s1) @ D @ random_sp(g, word_len, s2)
    return IsogenyRep.standard(m)


def bounded_rep_pipeline(f: IsogenyRep) -> PipelineResult:
    """Rewrite f in a symplectic domain basis with certified height.

    1. HNF of F gives a domain basis where the rep is upper triangular with
       entries at most deg f.
    2. psi' is transported to that basis.
    3. A symplectic basis of the transported form is built with its own
       certificate.
    4. The rep in (new symplectic basis, standard codomain basis) is returned.
    """
    g = f.g
    if f.codomain_form != standard_J(g):
        raise ValueError("codomain basis must be symplectic (form == J)")
    n = degree(f)
    cert = HeightCertificate(input_bound_N=0)

    h, u = hnf(f.matrix)
    hnf_height = height(h)
    cert.check("hnf:H(h)<=deg", n, hnf_height)

    psi = f.domain_form.gram
    transported = u.T @ psi @ u
    n_t = height(transported) if any(x for r in transported.rows for x in r) else 0
    cert.check("transport:N<=(2g)^2*H(psi')*H(u)^2", (2 * g) ** 2 * height(psi) * height(u) ** 2, n_t)

    b, sub = symplectic_basis(SymplecticForm(g, transported))
    for s in sub.step_bounds:
        cert.check("sympl:" + s.label, s.bound, s.observed)
    cert.input_bound_N = sub.input_bound_N
    cert.exponent_budget = sub.exponent_budget
    cert.constant = sub.constant

    new_basis = u @ b.cols
    rep = h @ b.cols
    final = height(rep)
    certified = 2 * g * n * sub.final_bound
    cert.check("final:H(rep)<=2g*H(h)*H(b)", 2 * g * hnf_height * height(b.cols), final)
    cert.check("final:H(rep)<=2g*deg*C*N^k", certified, final)
    cert.final_height = final

    if new_basis.T @ psi @ new_basis != standard_J(g).gram:
        raise CertificateViolation("B'^T psi' B' != J")
    if rep != f.matrix @ new_basis:
        raise CertificateViolation("rep does not match F B'")
    return PipelineResult(
        domain_basis=BasisMatrix(g, new_basis),
        rep_in_new_bases=rep,
        hnf_height=hnf_height,
        final_height=final,
        degree=n,
        certificate=cert,
        certified_bound=certified,
    )


# -- text format --------------------------------------------------------------

def rep_to_text(f: IsogenyRep) -> str:
    return "".join([
        f"g={f.g}\n",
        "matrix\n", to_text(f.matrix),
        "psi\n", to_text(f.codomain_form.gram),
        "psi_prime\n", to_text(f.domain_form.gram),
    ])


def rep_from_text(text: str) -> IsogenyRep:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("g="):
        raise ValueError("missing g=<g> header")
    g = int(lines[0][2:])
    rest = lines[1:]
    blocks = {}
    for name in ("matrix", "psi", "psi_prime"):
        if not rest or rest[0].strip() != name:
            raise ValueError(f"expected section {name!r}")
        blocks[name], rest = read_matrix(rest[1:])
    if rest:
        raise ValueError("trailing data after isogeny rep")
    return IsogenyRep(g, blocks["matrix"], SymplecticForm(g, blocks["psi"]),
                      SymplecticForm(g, blocks["psi_prime"]))
