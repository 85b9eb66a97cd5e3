import random
import threading

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from isoheight.errors import NotInSiegelSpaceError, SingularActionError
from isoheight.exact import ExactMatrix, height
from isoheight.isogeny import bounded_rep_pipeline, generate_polarized_isogeny
from isoheight.siegel import (
    SiegelPoint,
    complete_to_symplectic,
    context,
    default_precision_bits,
    fundamental_preimage,
    in_fundamental_domain,
    inversion_set,
    mobius_apply,
    period_point_from_form,
    point_from_text,
    point_to_text,
    random_point,
    reduce_to_fundamental,
)
from isoheight.symplectic import BasisMatrix, gsp_multiplier, random_sp

from oracles import lattice_reduce_upper

S = ExactMatrix([[0, -1], [1, 0]])


def pt(*rows, bits=None):
    return SiegelPoint.from_rows(rows, bits)


def close(a, b, tol=1e-30):
    return float(a.distance(b)) <= tol


# -- construction ------------------------------------------------------------------

def test_point_validation():
    with pytest.raises(NotInSiegelSpaceError):
        pt(["1-1j"])
    with pytest.raises(NotInSiegelSpaceError):
        pt(["1j", "0.5"], ["0", "1j"])
    with pytest.raises(NotInSiegelSpaceError):
        pt(["1j", "2j"], ["2j", "1j"])


def test_parse_forms():
    z = pt(["0.3+0.05j"])
    assert z.entries[0][0] == z.ctx.mpc("0.3", "0.05")
    assert pt(["2i"]).entries[0][0] == z.ctx.mpc(0, 2)
    assert pt([(1, 2)]).entries[0][0] == z.ctx.mpc(1, 2)


def test_precision_env(monkeypatch):
    monkeypatch.setenv("SIEGEL_PRECISION_BITS", "200")
    assert default_precision_bits() == 200
    assert pt(["1j"]).precision_bits == 200
    monkeypatch.delenv("SIEGEL_PRECISION_BITS")
    assert default_precision_bits() == 128


def test_text_roundtrip():
    rng = random.Random(3)
    z = random_point(2, rng)
    text = point_to_text(z)
    assert text.startswith("precision_bits=128\n2\n")
    assert close(point_from_text(text), z, 1e-36)


# -- action ---------------------------------------------------------------------------

def test_mobius_examples():
    i = pt(["1j"])
    assert close(mobius_apply(ExactMatrix([[1, 1], [0, 1]]), i), pt(["1+1j"]))
    assert close(mobius_apply(S, i), i)
    z = pt(["0.1+1j", "0.2+0.1j"], ["0.2+0.1j", "-0.3+2j"])
    T = ExactMatrix([[1, 0, 1, 0], [0, 1, 0, 2], [0, 0, 1, 0], [0, 0, 0, 1]])
    assert close(mobius_apply(T, z), pt(["1.1+1j", "0.2+0.1j"], ["0.2+0.1j", "1.7+2j"]))


def test_mobius_singular():
    # C Z + D = 0 cannot happen for Z in H_g with symplectic m, so use a degenerate m
    m = ExactMatrix([[1, 0], [0, 0]])
    with pytest.raises(SingularActionError):
        mobius_apply(m, pt(["1j"]))


def test_mobius_leaves_hg():
    # negative multiplier maps H_1 to the lower half plane
    with pytest.raises(NotInSiegelSpaceError):
        mobius_apply(ExactMatrix([[1, 0], [0, -1]]), pt(["1j"]))


def test_period_point_from_form():
    z = pt(["0.2+1.3j"])
    assert close(period_point_from_form(BasisMatrix(1, ExactMatrix.identity(2)), z), z)
    b = ExactMatrix([[1, 0], [1, 1]])
    assert close(period_point_from_form(b, z), pt(["1.2+1.3j"]))
    rng = random.Random(9)
    for seed in range(20):
        w = period_point_from_form(random_sp(2, 6, seed), random_point(2, rng))
        assert w.g == 2


def test_cocycle_random():
    rng = random.Random(12)
    for _ in range(60):
        g = rng.randint(1, 3)
        a = random_sp(g, rng.randint(0, 8), rng.getrandbits(32))
        b = random_sp(g, rng.randint(0, 8), rng.getrandbits(32))
        z = random_point(g, rng)
        lhs = mobius_apply(a @ b, z)
        rhs = mobius_apply(a, mobius_apply(b, z))
        assert float(lhs.distance(rhs)) <= 1e-20


# -- fundamental domain ---------------------------------------------------------------------

def test_domain_examples():
    assert in_fundamental_domain(pt(["2j"]))
    assert not in_fundamental_domain(pt(["0.4+0.1j"]))
    assert in_fundamental_domain(pt(["2j", "0"], ["0", "3j"]))
    r = in_fundamental_domain(random_point(3, random.Random(1)))
    assert r.heuristic


def test_inversion_set_g2():
    inv = inversion_set(2)
    assert len(inv) == 67
    for m in inv:
        assert gsp_multiplier(m, 2) == 1


def test_complete_to_symplectic():
    for C, D in [([[1, 0], [0, 1]], [[1, 1], [1, 0]]), ([[1, 0], [0, 0]], [[0, 0], [0, 1]]),
                 ([[1, -1], [0, 0]], [[0, 0], [1, 1]])]:
        m = complete_to_symplectic(C, D)
        assert m is not None and gsp_multiplier(m, 2) == 1
        Cm, Dm = m.blocks()[2:]
        assert Cm.tolist() == C and Dm.tolist() == D
    # C D^T not symmetric: no symplectic completion
    assert complete_to_symplectic([[1, 1], [0, 1]], [[0, 0], [1, 0]]) is None


def test_reduce_examples():
    r = reduce_to_fundamental(pt(["1j"]))
    assert r.gamma == ExactMatrix.identity(2)
    r = reduce_to_fundamental(pt(["0.5j"]))
    assert r.gamma == S
    assert close(r.reduced, pt(["2j"]))


def test_reduce_matches_lattice_oracle_example():
    z = pt(["0.3+0.05j"])
    r = reduce_to_fundamental(z)
    tau, (a, b, c, d) = lattice_reduce_upper(z.entries[0][0])
    assert abs(r.reduced.entries[0][0] - tau) < 1e-25
    g = r.gamma.tolist()
    assert g == [[a, b], [c, d]] or g == [[-a, -b], [-c, -d]]


def test_reduce_g1_random_against_oracle():
    rng = random.Random(101)
    for _ in range(200):
        z = pt([(rng.uniform(-5, 5), 10 ** rng.uniform(-3, 1))])
        r = reduce_to_fundamental(z)
        w = r.reduced.entries[0][0]
        assert abs(w.real) <= 0.5 + 1e-25 and abs(w) >= 1 - 1e-25
        tau, _ = lattice_reduce_upper(z.entries[0][0])
        assert abs(w - tau) < 1e-20
        assert gsp_multiplier(r.gamma, 1) == 1


@pytest.mark.parametrize("g", [2, 3])
def test_reduce_random_g2_g3(g):
    rng = random.Random(40 + g)
    for _ in range(15):
        z = random_point(g, rng, im_scale=0.3)
        r = reduce_to_fundamental(z)
        assert gsp_multiplier(r.gamma, g) == 1
        assert r.gamma.is_integral()
        assert r.heuristic == (g >= 3)
        rep = in_fundamental_domain(r.reduced)
        assert rep.inside, rep.violations
        assert float(mobius_apply(r.gamma, z).distance(r.reduced)) < 1e-30


def test_fundamental_preimage_examples():
    gamma, t, g2 = fundamental_preimage(ExactMatrix.identity(2), pt(["1j"]))
    assert gamma == ExactMatrix.identity(2) and close(t, pt(["1j"]))
    gamma, t, g2 = fundamental_preimage(ExactMatrix([[1, 0], [0, 2]]), pt(["1j"]))
    assert g2 == S
    assert gamma == ExactMatrix([[0, -2], [1, 0]])
    assert close(t, pt(["2j"]))
    assert height(gamma) == 2 <= 2 * 2 * 1


def test_fundamental_preimage_isogeny_fixture():
    f = generate_polarized_isogeny(2, [1, 2], 2, 8, 7)
    g1 = bounded_rep_pipeline(f).rep_in_new_bases
    s = pt(["0.1+1.1j", "0.05+0.3j"], ["0.05+0.3j", "0.1+1.1j"])
    gamma, t, g2 = fundamental_preimage(g1, s)
    assert height(gamma) <= 4 * height(g1) * height(g2)
    assert float(mobius_apply(gamma, s).distance(t)) < 1e-30
    assert in_fundamental_domain(t)


def test_thread_determinism():
    rng = random.Random(5)
    pts = [random_point(2, rng, im_scale=0.3) for _ in range(6)]
    ref = [reduce_to_fundamental(z) for z in pts]
    out = [None] * len(pts)

    def work(i):
        out[i] = reduce_to_fundamental(pts[i])

    threads = [threading.Thread(target=work, args=(i,)) for i in range(len(pts))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for a, b in zip(ref, out):
        assert a.gamma == b.gamma
        assert a.reduced.entries == b.reduced.entries


def test_context_is_thread_private():
    seen = {}

    def grab():
        seen[threading.get_ident()] = id(context(128))

    ts = [threading.Thread(target=grab) for _ in range(3)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert id(context(128)) not in seen.values()
    assert mpmath.mp.prec == 53


@given(st.floats(-10, 10), st.floats(1e-3, 10))
@settings(max_examples=200, deadline=None)
def test_g1_reduction_property(x, y):
    z = pt([(x, y)])
    r = reduce_to_fundamental(z)
    assert in_fundamental_domain(r.reduced)
    tau, _ = lattice_reduce_upper(z.entries[0][0])
    w = r.reduced.entries[0][0]
    # on the boundary the two reductions may pick different representatives
    alts = [tau, tau - 1, tau + 1, -1 / tau]
    assert min(abs(w - a) for a in alts) < 1e-20
