import random
from fractions import Fraction

import pytest

from cdgl.dgl import (DGLMorphism, DivergenceError,
                      IllFormedDifferentialError, MCElement,
                      act_on_morphism, bch, build_dgl, check_mc,
                      component_complex, exp_ad, exp_derivation_values,
                      gauge_act, gauge_equivalent, h0_group, log_morphism,
                      perturbed)
from cdgl.exactlin import homology_at
from cdgl.freelie import Generator, LieElement, Truncation, bracket, left_normed
from cdgl.models import (bernoulli, circle_model, interval_model,
                         mc_point_model, sphere_model, wedge_model)

from oracles import w_bch


def T(n):
    return Truncation(n)


def rand_deg0(rng, L, n_terms=3):
    out = L.zero()
    gens0 = [g for g in L.gens if g.degree == 0]
    cap = L.trunc.max_bracket_length
    for _ in range(n_terms):
        ln = rng.randint(1, cap)
        seq = tuple(rng.choice(gens0) for _ in range(ln))
        out = out + left_normed(seq, L.trunc).scale(
            Fraction(rng.randint(-3, 3), rng.randint(1, 2)))
    return out


# -- build_dgl ---------------------------------------------------------------

def test_build_zero_differential_valid():
    x = Generator("x", 3)
    L = build_dgl((x,), {}, T(3))
    assert L.d(L.gen("x")).is_zero()


def test_build_circle_model():
    L = circle_model(T(5))
    b, x = L.gen("b"), L.gen("x")
    assert L.d(b) == bracket(b, b).scale(Fraction(-1, 2))
    assert L.d(x) == bracket(x, b)


def test_build_interval_model_cap8_d_squared_zero():
    L = interval_model(T(8))
    for g in L.gens:
        assert L.d(L.d_on_gens[g]).is_zero()


def test_bernoulli_convention_pinned_by_d_squared():
    # flipping B1 to +1/2 must break d^2 = 0 at cap >= 4
    trunc = T(4)
    a, b, x = Generator("a", -1), Generator("b", -1), Generator("x", 0)
    ea, eb, ex = (LieElement.gen(g, trunc) for g in (a, b, x))
    dx = bracket(ex, ea)
    term = ea - eb
    fact = Fraction(1)
    coeffs = {0: Fraction(1), 1: Fraction(1, 2), 2: Fraction(1, 6), 3: Fraction(0)}
    n = 0
    while not term.is_zero() and n in coeffs:
        dx = dx + term.scale(coeffs[n] / fact)
        n += 1
        fact *= n
        term = bracket(ex, term)
    d = {a: bracket(ea, ea).scale(Fraction(-1, 2)),
         b: bracket(eb, eb).scale(Fraction(-1, 2)), x: dx}
    with pytest.raises(IllFormedDifferentialError) as ei:
        build_dgl((a, b, x), d, trunc)
    assert ei.value.gen.name == "x"


def test_ill_formed_differential_witness():
    x = Generator("x", 1)
    y = Generator("y", 0)
    trunc = T(3)
    ex, ey = LieElement.gen(x, trunc), LieElement.gen(y, trunc)
    # d x = [y, y]? wrong degrees; use dx = [y,y] has degree -? |y|=0 ->
    # [y,y] = 0. Use dx = y with dy = y-ish loop instead:
    d = {x: ey, y: bracket(ey, ey)}  # dy must have degree -1; [y,y]=0 though
    # make a genuinely broken one: dx = y, dy = [x, ?]; simplest: two gens
    u = Generator("u", 2)
    v = Generator("v", 1)
    w = Generator("w", 0)
    eu, ev, ew = (LieElement.gen(g, trunc) for g in (u, v, w))
    bad = {u: ev, v: ew}
    with pytest.raises(IllFormedDifferentialError) as ei:
        build_dgl((u, v, w), bad, trunc)
    assert ei.value.gen.name == "u"
    assert ei.value.residue.min_length() == 1


# -- check_mc ----------------------------------------------------------------

def test_mc_zero_true():
    L = circle_model(T(4))
    ok, res = check_mc(L, L.zero())
    assert ok and res.is_zero()


def test_mc_b_in_circle():
    L = circle_model(T(5))
    ok, _ = check_mc(L, L.gen("b"))
    assert ok


def test_mc_generators_of_interval():
    L = interval_model(T(6))
    assert check_mc(L, L.gen("a"))[0]
    assert check_mc(L, L.gen("b"))[0]


def test_mc_wrong_degree_raises():
    L = circle_model(T(4))
    from cdgl.freelie import DegreeError
    with pytest.raises(DegreeError):
        check_mc(L, L.gen("x"))


def test_mc_failure_returns_residue():
    L = mc_point_model(T(4))
    ok, res = check_mc(L, L.gen("a").scale(2))
    assert not ok and not res.is_zero()


# -- perturbation and components ----------------------------------------------

def test_perturb_at_zero_is_identity():
    L = circle_model(T(4))
    La = perturbed(L, L.zero())
    for g in L.gens:
        assert La.d_on_gens[g] == L.d_on_gens[g]


def test_perturb_circle_at_b_kills_dx():
    L = circle_model(T(5))
    Lb = perturbed(L, L.gen("b"))
    assert Lb.d(L.gen("x")).is_zero()


def test_circle_component_h0_dimension_one():
    L = circle_model(T(6))
    C = component_complex(L, L.gen("b"), degrees=range(0, 3))
    assert homology_at(C, 0).dimension == 1


def test_perturbation_mc_bijection_randomized():
    # z MC in L iff z - a MC in (L, d_a); gauge transports of MC stay MC
    rng = random.Random(31)
    L = circle_model(T(5))
    b = L.gen("b")
    Lb = perturbed(L, b)
    for _ in range(20):
        x = rand_deg0(rng, L)
        z = gauge_act(x, MCElement(L, b)).value  # MC in L
        ok, _ = check_mc(Lb, z - b)
        assert ok
        w = gauge_act(x, MCElement(Lb, L.zero())).value  # MC in (L, d_b)
        ok2, _ = check_mc(L, w + b)
        assert ok2


# -- BCH ----------------------------------------------------------------------

def test_bch_with_zero():
    L = wedge_model((1, 1), T(4))
    x = L.gen("x")
    assert bch(x, L.zero()) == x
    assert bch(L.zero(), x) == x


def test_bch_collinear_divisibility():
    rng = random.Random(33)
    L = wedge_model((1, 1), T(5))
    for _ in range(10):
        a = rand_deg0(rng, L)
        mu = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
        nu = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
        assert bch(a.scale(mu), a.scale(nu)) == a.scale(mu + nu)


def test_bch_low_order_formula():
    L = wedge_model((1, 1), T(2))
    u, v = L.gen("x"), L.gen("y")
    assert bch(u, v) == u + v + bracket(u, v).scale(Fraction(1, 2))


def test_bch_against_independent_oracle_cap6():
    rng = random.Random(34)
    L = wedge_model((1, 1), T(6))

    def to_words(e):
        return {tuple((g.name, g.degree) for g in w): c for w, c in e.terms.items()}

    for _ in range(6):
        x = rand_deg0(rng, L, n_terms=2)
        y = rand_deg0(rng, L, n_terms=2)
        got = bch(x, y)
        want = w_bch(to_words(x), to_words(y), 6)
        assert to_words(got) == want


def test_bch_associative_at_truncation():
    rng = random.Random(35)
    L = wedge_model((1, 1), T(4))
    for _ in range(10):
        x, y, z = (rand_deg0(rng, L, n_terms=2) for _ in range(3))
        assert bch(bch(x, y), z) == bch(x, bch(y, z))


# -- exp/log -------------------------------------------------------------------

def test_exp_zero_is_identity():
    L = wedge_model((1, 1), T(4))
    phi = exp_derivation_values(L, {g: L.zero() for g in L.gens})
    assert phi == DGLMorphism.identity(L)


def test_log_of_shear_automorphism():
    # on (L(x,y), 0) with |x| = |y|: log of phi(x) = x+y, phi(y) = y is
    # theta(x) = y, theta(y) = 0, and exp(theta) = phi
    L = wedge_model((3, 3), T(4))
    x, y = L.gen("x"), L.gen("y")
    phi = DGLMorphism(L, L, {L.generator("x"): x + y, L.generator("y"): y}).validate()
    vals = log_morphism(phi)
    assert vals[L.generator("x")] == y
    assert vals[L.generator("y")].is_zero()
    back = exp_derivation_values(L, vals)
    assert back == phi


def test_exp_log_roundtrip_exp_ad_cap4():
    L = wedge_model((1, 1), T(4))
    u = L.gen("x")
    phi = exp_ad(L, u)
    vals = log_morphism(phi)
    back = exp_derivation_values(L, vals, check_cycle=False)
    assert back == phi


def test_exp_divergence_error():
    L = sphere_model(3, T(3))
    x = L.gen("x")
    with pytest.raises(DivergenceError):
        exp_derivation_values(L, {L.generator("x"): x}, check_cycle=False)


def test_exp_is_group_morphism_via_bch():
    rng = random.Random(36)
    L = wedge_model((1, 1), T(4))
    for _ in range(8):
        y = rand_deg0(rng, L, 2)
        z = rand_deg0(rng, L, 2)
        lhs = exp_ad(L, bch(y, z))
        rhs = exp_ad(L, y).compose(exp_ad(L, z))
        assert lhs == rhs


# -- gauge ---------------------------------------------------------------------

def test_gauge_identity_law():
    L = circle_model(T(5))
    a = MCElement(L, L.gen("b"))
    assert gauge_act(L.zero(), a).value == a.value


def test_gauge_abelian_case():
    # in an abelian dgl x gauge a = a - dx
    u = Generator("u", 0)
    r = Generator("r", -1)
    trunc = T(1)  # length-1 truncation forces abelian
    eu = LieElement.gen(u, trunc)
    L = build_dgl((u, r), {u: LieElement.gen(r, trunc)}, trunc)
    a = MCElement(L, L.zero())
    res = gauge_act(L.gen("u"), a)
    assert res.value == -L.d(L.gen("u"))


def test_gauge_composition_law_randomized():
    rng = random.Random(37)
    L = circle_model(T(5))
    b = MCElement(L, L.gen("b"))
    for _ in range(12):
        x = rand_deg0(rng, L, 2)
        y = rand_deg0(rng, L, 2)
        lhs = gauge_act(bch(x, y), b)
        rhs = gauge_act(x, gauge_act(y, b))
        assert lhs.value == rhs.value


def test_interval_gauge_transport_mirrored_and_paper():
    L = interval_model(T(8))
    a = MCElement(L, L.gen("a"))
    b = MCElement(L, L.gen("b"))
    x = L.gen("x")
    assert gauge_act(x, a).value == b.value        # builtin orientation
    # the printed orientation dx = ad_x b + sum B_n/n! ad_x^n (b - a) is the
    # same interval with the endpoints swapped: there, x transports b to a
    trunc = T(6)
    from cdgl.models import bernoulli
    ga, gb, gx = Generator("a", -1), Generator("b", -1), Generator("x", 0)
    ea, eb, ex = (LieElement.gen(g, trunc) for g in (ga, gb, gx))
    dx = bracket(ex, eb)
    term = eb - ea
    fact = Fraction(1)
    n = 0
    while not term.is_zero():
        dx = dx + term.scale(bernoulli(n) / fact)
        n += 1
        fact *= n
        term = bracket(ex, term)
    P = build_dgl((ga, gb, gx), {ga: bracket(ea, ea).scale(Fraction(-1, 2)),
                                 gb: bracket(eb, eb).scale(Fraction(-1, 2)),
                                 gx: dx}, trunc, mc_gens=(ga, gb))
    assert gauge_act(P.gen("x"), MCElement(P, P.gen("b"))).value == P.gen("a")


def test_gauge_equivalent_reflexive():
    L = circle_model(T(5))
    b = MCElement(L, L.gen("b"))
    res = gauge_equivalent(b, b)
    assert res.equivalent and res.witness.is_zero()


def test_gauge_equivalent_interval():
    L = interval_model(T(6))
    a = MCElement(L, L.gen("a"))
    b = MCElement(L, L.gen("b"))
    res = gauge_equivalent(a, b)
    assert res.equivalent
    assert gauge_act(res.witness, a).value == b.value


def test_gauge_equivalent_negative_circle():
    # in the circle model, b and 0 are NOT gauge equivalent (the length-1
    # obstruction b cannot be produced: d has no linear part)
    L = circle_model(T(5))
    b = MCElement(L, L.gen("b"))
    zero = MCElement(L, L.zero())
    res = gauge_equivalent(zero, b)
    assert not res.equivalent
    assert res.failed_stage == 1


def test_gauge_perturbation_equivariance():
    # x gauge_{d_a}(z - a) = (x gauge_d z) - a with the SAME x: the exact
    # identity behind both the staging algorithm and the MC bijection
    rng = random.Random(41)
    L = interval_model(T(5))
    a = L.gen("a")
    La = perturbed(L, a)
    for _ in range(8):
        x = rand_deg0(rng, L, 2)
        z = gauge_act(x, MCElement(L, L.gen("b"))).value
        lhs = gauge_act(x, MCElement(La, z - a)).value
        rhs = gauge_act(x, MCElement(L, z)).value - a
        assert lhs == rhs


def test_gauge_equivalent_randomized_orbit():
    rng = random.Random(38)
    L = interval_model(T(5))
    a = MCElement(L, L.gen("a"))
    for _ in range(6):
        x = rand_deg0(rng, L, 2)
        target = gauge_act(x, a)
        res = gauge_equivalent(a, target)
        assert res.equivalent
        assert gauge_act(res.witness, a).value == target.value


# -- H0 group -------------------------------------------------------------------

def test_h0_single_generator_abelian():
    L = wedge_model((1,), T(3))
    G = h0_group(L)
    assert G.dimension == 1 and G.abelian and G.nilpotency_class == 1


def test_h0_wedge_two_circles_cap2():
    L = wedge_model((1, 1), T(2))
    G = h0_group(L)
    assert G.dimension == 3
    assert not G.abelian
    assert G.nilpotency_class == 2


def test_h0_divisibility_law():
    rng = random.Random(39)
    L = wedge_model((1, 1), T(5))
    G = h0_group(L)
    for _ in range(8):
        a = rand_deg0(rng, L, 2)
        u = G.class_of(a)
        mu = Fraction(rng.randint(-2, 3), rng.randint(1, 2))
        nu = Fraction(rng.randint(-2, 3), rng.randint(1, 2))
        lhs = G.class_of(bch(a.scale(mu), a.scale(nu)))
        rhs = G.class_of(a.scale(mu + nu))
        assert lhs == rhs


def test_h0_circle_component_is_line():
    # H0 of the unperturbed circle model is 0 (dx = [x,b] is not a cycle);
    # the component at b carries the rational fundamental group
    L = circle_model(T(4))
    assert h0_group(L).dimension == 0
    G = h0_group(perturbed(L, L.gen("b")))
    assert G.dimension == 1 and G.abelian


def test_h0_structure_constants_representative_independent():
    # replacing a representative by representative + boundary leaves the
    # structure constants unchanged
    u = Generator("u", 0)
    v = Generator("v", 0)
    s = Generator("s", 1)
    trunc = T(3)
    ev = LieElement.gen(v, trunc)
    L2 = build_dgl((u, v, s), {s: ev}, trunc)
    G2 = h0_group(L2)
    assert G2.dimension == 1  # v is a boundary, u survives
    x = L2.gen("u")
    shifted = x + L2.d(L2.gen("s")).scale(Fraction(5, 3))
    for other in (L2.gen("u"), bch(x, x)):
        assert G2.class_of(bch(x, other)) == G2.class_of(bch(shifted, other))


def test_h0_identity_and_inverse():
    L = wedge_model((1, 1), T(3))
    G = h0_group(L)
    u = G.class_of(L.gen("x"))
    zero = G.class_of(L.zero())
    assert G.mul(u, G.inverse(u)) == zero
    assert G.mul(zero, u) == u


# -- action on morphisms ----------------------------------------------------------

def test_act_zero_fixes_morphism():
    L = wedge_model((1, 1), T(4))
    S = sphere_model(1, T(4))
    phi = DGLMorphism(S, L, {S.generator("x"): L.gen("y")}).validate()
    assert act_on_morphism(L.zero(), phi) == phi


def test_act_exp_ad_example():
    L = wedge_model((1, 1), T(4))
    S = sphere_model(1, T(4))
    phi = DGLMorphism(S, L, {S.generator("x"): L.gen("y")}).validate()
    acted = act_on_morphism(L.gen("x"), phi)
    expected = exp_ad(L, L.gen("x")).apply(L.gen("y"))
    assert acted.images[S.generator("x")] == expected


def test_action_compatible_with_bch():
    rng = random.Random(40)
    L = wedge_model((1, 1), T(4))
    S = sphere_model(1, T(4))
    phi = DGLMorphism(S, L, {S.generator("x"): L.gen("y")}).validate()
    for _ in range(6):
        y = rand_deg0(rng, L, 2)
        z = rand_deg0(rng, L, 2)
        lhs = act_on_morphism(bch(y, z), phi)
        rhs = act_on_morphism(y, act_on_morphism(z, phi))
        assert lhs == rhs
