import random
from fractions import Fraction

import pytest

from cdgl.cylinder import (CapExceededError, Cylinder, Witness, check_homotopy)
from cdgl.dgl import DGLMorphism, exp_ad
from cdgl.freelie import Truncation, bracket, left_normed
from cdgl.models import circle_model, sphere_model, wedge_model


def T(n):
    return Truncation(n)


def test_leibniz_on_t_tensor():
    L = circle_model(T(4))
    cyl = Cylinder(L, 4)
    x = L.gen("x")
    F = cyl.t_power(1, x)
    dF = cyl.d(F)
    assert dF.value((0, True)) == x          # dt (x) x
    assert dF.value((1, False)) == L.d(x)    # t (x) dx


def test_d_of_dt_term():
    L = circle_model(T(4))
    cyl = Cylinder(L, 4)
    b = L.gen("b")
    dF = cyl.d(cyl.t_power(0, b, dt=True))
    assert dF.value((0, True)) == L.d(b).scale(-1)


def test_bracket_of_t_forms():
    L = wedge_model((1, 1), T(4))
    cyl = Cylinder(L, 4)
    x, y = L.gen("x"), L.gen("y")
    F = cyl.t_power(1, x)
    G = cyl.t_power(1, y)
    br = cyl.bracket(F, G)
    assert br.value((2, False)) == bracket(x, y)


def test_d_squared_zero_randomized():
    rng = random.Random(71)
    L = wedge_model((1, 2), T(3))
    cyl = Cylinder(L, 5)
    for _ in range(15):
        terms = {}
        for _ in range(3):
            k = rng.randint(0, 3)
            has_dt = rng.random() < 0.4
            ln = rng.randint(1, 3)
            seq = tuple(rng.choice(L.gens) for _ in range(ln))
            val = left_normed(seq, L.trunc).scale(Fraction(rng.randint(-2, 2)))
            if val.is_zero():
                continue
            # keep slots homogeneous: one term per monomial
            terms[(k, has_dt)] = val
        F = cyl.t_power(0, L.zero())
        for m, v in terms.items():
            F = F + cyl.t_power(m[0], v, dt=m[1])
        assert cyl.d(cyl.d(F)).is_zero()


def test_eval_endpoints():
    L = wedge_model((1, 1), T(4))
    cyl = Cylinder(L, 4)
    x, y = L.gen("x"), L.gen("y")
    F = cyl.t_power(1, x) + cyl.t_power(0, y, dt=True)
    assert cyl.eval_endpoint(F, 0).is_zero()
    assert cyl.eval_endpoint(F, 1) == x
    G = cyl.constant(x)
    assert cyl.eval_endpoint(G, 0) == x
    assert cyl.eval_endpoint(G, 1) == x


def test_eval_of_exponential_flow():
    # eval(e^{t ad_u}(v), 1) = e^{ad_u}(v)
    L = wedge_model((1, 1), T(5))
    cyl = Cylinder(L, 6)
    u, v = L.gen("x"), L.gen("y")
    flow = cyl.exp_ad(cyl.t_power(1, u), cyl.constant(v))
    assert cyl.eval_endpoint(flow, 1) == exp_ad(L, u).apply(v)
    assert cyl.eval_endpoint(flow, 0) == v


def _paper_witness(cap=5, poly_cap=6, flip_sign=False):
    """The explicit circle homotopy into the wedge model: the witness sends
    the loop to the exponential flow and the MC generator to -u dt."""
    S = circle_model(T(cap))
    W = wedge_model((1, 1), T(cap), name="wedge")
    # use the paper's u, v names for the wedge generators
    u, v = W.gen("x"), W.gen("y")
    cyl = Cylinder(W, poly_cap)
    flow = cyl.exp_ad(cyl.t_power(1, u), cyl.constant(v))
    b_form = cyl.t_power(0, u.scale(1 if flip_sign else -1), dt=True)
    forms = {S.generator("x"): flow, S.generator("b"): b_form}
    f = DGLMorphism(S, W, {S.generator("x"): v}).validate()
    g = DGLMorphism(S, W, {S.generator("x"): exp_ad(W, u).apply(v)}).validate()
    return Witness(S, W, forms, poly_cap), f, g


def test_paper_homotopy_accepted():
    w, f, g = _paper_witness()
    verdict = check_homotopy(w, f, g)
    assert verdict.ok, verdict.certificate
    assert verdict.stable


def test_paper_homotopy_sign_flip_rejected_with_certificate():
    w, f, g = _paper_witness(flip_sign=True)
    verdict = check_homotopy(w, f, g)
    assert not verdict.ok
    assert verdict.certificate.get("morphism", {}).get("generator") in ("x", "b")


def test_constant_witness():
    L = sphere_model(3, T(3))
    W = sphere_model(3, T(3))
    phi = DGLMorphism(L, W, {L.generator("x"): W.gen("x").scale(2)}).validate()
    cyl = Cylinder(W, 3)
    w = Witness(L, W, {L.generator("x"): cyl.constant(phi.images[L.generator("x")])}, 3)
    assert check_homotopy(w, phi, phi).ok


def test_endpoint_mismatch_rejected():
    L = sphere_model(3, T(3))
    W = sphere_model(3, T(3))
    phi = DGLMorphism(L, W, {L.generator("x"): W.gen("x")}).validate()
    psi = DGLMorphism(L, W, {L.generator("x"): W.gen("x").scale(2)}).validate()
    cyl = Cylinder(W, 3)
    w = Witness(L, W, {L.generator("x"): cyl.constant(W.gen("x"))}, 3)
    verdict = check_homotopy(w, phi, psi)
    assert not verdict.ok and "endpoint1" in verdict.certificate


def test_exp_witness_consistent_with_action():
    # a verified exponential witness certifies psi = e^{ad_u} . phi
    w, f, g = _paper_witness()
    from cdgl.dgl import act_on_morphism
    W = w.target
    assert act_on_morphism(W.gen("x"), f) == g


def test_cap_overflow_raises():
    L = wedge_model((1, 1), T(5))
    cyl = Cylinder(L, 1)
    u, v = L.gen("x"), L.gen("y")
    with pytest.raises(CapExceededError):
        cyl.exp_ad(cyl.t_power(1, u), cyl.constant(v))
