"""The cylinder side of cdgl homotopy: L tensored with the free cdga on
(t, dt), endpoint evaluations, and verification of homotopy witnesses.

Forms are finite sums t^k (x) x and t^k dt (x) x with Lie-element values;
the polynomial degree carries an explicit cap and series witnesses (gauge
exponentials over nilpotent actions) terminate below it, which the checker
verifies before trusting a verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .dgl import DGLMorphism, DGLPresentation, DivergenceError
from .freelie import LieElement, word_degree


class CapExceededError(ValueError):
    """A form's polynomial degree ran past the declared cap."""


class PolyForm:
    """Element of L (x) (polynomials in t, dt): monomial -> LieElement.

    Monomial keys are (k, has_dt); |t| = 0 and |dt| = -1, so a term
    t^k dt (x) x has degree |x| - 1.
    """

    __slots__ = ("owner", "terms", "poly_cap")

    def __init__(self, owner: DGLPresentation, terms, poly_cap: int):
        self.owner = owner
        self.poly_cap = poly_cap
        self.terms = {}
        overflow = False
        for m, v in terms.items():
            if v is None or v.is_zero():
                continue
            if m[0] > poly_cap:
                overflow = True
                continue
            self.terms[m] = v
        if overflow:
            raise CapExceededError("polynomial degree exceeds cap %d" % poly_cap)

    def is_zero(self):
        return not self.terms

    def value(self, m) -> LieElement:
        v = self.terms.get(m)
        return v if v is not None else self.owner.zero()

    def degree(self):
        degs = set()
        for (k, has_dt), v in self.terms.items():
            degs.add(v.degree() - (1 if has_dt else 0))
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError("inhomogeneous form")
        return degs.pop()

    def __add__(self, other):
        out = dict(self.terms)
        for m, v in other.terms.items():
            s = out.get(m)
            s = v if s is None else s + v
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s
        return PolyForm(self.owner, out, self.poly_cap)

    def scale(self, c):
        return PolyForm(self.owner, {m: v.scale(c) for m, v in self.terms.items()},
                        self.poly_cap)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __eq__(self, other):
        return isinstance(other, PolyForm) and self.terms == other.terms

    def __repr__(self):
        bits = []
        for (k, has_dt), v in sorted(self.terms.items()):
            mono = ("t^%d" % k if k else "1") + ("dt" if has_dt else "")
            bits.append("%s(x)%r" % (mono, v))
        return " + ".join(bits) if bits else "0"


class Cylinder:
    """Operations on L (x) poly(t, dt) at a fixed polynomial cap."""

    def __init__(self, L: DGLPresentation, poly_cap: int):
        self.L = L
        self.poly_cap = poly_cap

    def zero(self) -> PolyForm:
        return PolyForm(self.L, {}, self.poly_cap)

    def constant(self, x: LieElement) -> PolyForm:
        return PolyForm(self.L, {(0, False): x}, self.poly_cap)

    def t_power(self, k: int, x: LieElement, dt=False) -> PolyForm:
        return PolyForm(self.L, {(k, dt): x}, self.poly_cap)

    def d(self, F: PolyForm) -> PolyForm:
        """d(a (x) x) = da (x) x + (-1)^{|a|} a (x) dx."""
        out = {}

        def acc(m, v):
            if v.is_zero():
                return
            s = out.get(m)
            s = v if s is None else s + v
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s

        for (k, has_dt), v in F.terms.items():
            if not has_dt:
                if k >= 1:
                    acc((k - 1, True), v.scale(k))
                acc((k, False), self.L.d(v))
            else:
                acc((k, True), self.L.d(v).scale(-1))
        return PolyForm(self.L, out, self.poly_cap)

    def bracket(self, F: PolyForm, G: PolyForm) -> PolyForm:
        """[a (x) x, a' (x) x'] = (-1)^{|a'||x|} a a' (x) [x, x'].

        Polynomial degrees are never silently dropped: the constructor
        raises when the cap overflows, keeping verdicts sound.
        """
        from .freelie import bracket as lie_bracket
        out = {}
        for (k, d1), v in F.terms.items():
            for (j, d2), w in G.terms.items():
                if d1 and d2:
                    continue
                if d2:
                    # Koszul sign per homogeneous word of the left value
                    val = self.L.zero()
                    for vw, vc in v.terms.items():
                        sgn = Fraction(-1) if word_degree(vw) % 2 else Fraction(1)
                        piece = LieElement({vw: vc * sgn}, self.L.trunc)
                        val = val + lie_bracket(piece, w)
                else:
                    val = lie_bracket(v, w)
                if val.is_zero():
                    continue
                m = (k + j, d1 or d2)
                s = out.get(m)
                s = val if s is None else s + val
                if s.is_zero():
                    out.pop(m, None)
                else:
                    out[m] = s
        return PolyForm(self.L, out, self.poly_cap)

    def apply_witness(self, images, e: LieElement) -> PolyForm:
        """Extend generator images (PolyForms) multiplicatively over the
        tensor words of e (the unique algebra-map extension)."""
        total = {}
        for w, c in e.terms.items():
            # fold the word left to right in the poly (x) T(V) algebra
            cur = {(0, False): {(): Fraction(1)}}
            for g in w:
                img = images[g]
                nxt = {}
                for (k, d1), u in cur.items():
                    for (j, d2), v in img.terms.items():
                        if d1 and d2:
                            continue
                        # Koszul: (a (x) u)(a' (x) v) = (-1)^{|a'||u|} aa' (x) uv
                        # |a'| = -1 iff d2; the sign is taken per word u
                        for uw, uc in u.items():
                            sgn = Fraction(1)
                            if d2 and word_degree(uw) % 2:
                                sgn = Fraction(-1)
                            for vw, vc in v.terms.items():
                                ww = uw + vw
                                if ww and not self.L.trunc.admits(ww):
                                    continue
                                m = (k + j, d1 or d2)
                                cur2 = nxt.setdefault(m, {})
                                s = cur2.get(ww, Fraction(0)) + sgn * uc * vc
                                if s:
                                    cur2[ww] = s
                                else:
                                    cur2.pop(ww, None)
                cur = nxt
            for m, words in cur.items():
                tgt = total.setdefault(m, {})
                for ww, cc in words.items():
                    if not ww:
                        continue
                    s = tgt.get(ww, Fraction(0)) + c * cc
                    if s:
                        tgt[ww] = s
                    else:
                        tgt.pop(ww, None)
        return PolyForm(self.L, {m: LieElement(ws, self.L.trunc)
                                 for m, ws in total.items()}, self.poly_cap)

    def exp_ad(self, E: PolyForm, F: PolyForm, max_iter=None) -> PolyForm:
        """e^{ad_E}(F) for a degree-0 form E; terminates at the caps."""
        if max_iter is None:
            max_iter = (self.L.trunc.max_bracket_length + 1) * (self.poly_cap + 2)
        total = F
        term = F
        k = 0
        fact = Fraction(1)
        while True:
            k += 1
            term = self.bracket(E, term)
            if term.is_zero():
                break
            if k > max_iter:
                raise DivergenceError("exp_ad series did not terminate at caps")
            fact *= k
            total = total + term.scale(Fraction(1, fact))
        return total

    def eval_endpoint(self, F: PolyForm, i: int) -> LieElement:
        """Substitute t = i, dt = 0."""
        out = self.L.zero()
        for (k, has_dt), v in F.terms.items():
            if has_dt:
                continue
            c = Fraction(i) ** k if k else Fraction(1)
            if c:
                out = out + v.scale(c)
        return out


@dataclass
class Witness:
    """Candidate homotopy: generator images in the cylinder of the target."""

    source: DGLPresentation
    target: DGLPresentation
    forms: dict            # Generator -> PolyForm
    poly_cap: int
    name: str = ""

    def cylinder(self) -> Cylinder:
        return Cylinder(self.target, self.poly_cap)


@dataclass
class HomotopyVerdict:
    ok: bool
    certificate: dict
    caps: dict
    stable: bool | None = None

    def __bool__(self):
        return self.ok


def check_homotopy(witness: Witness, phi: DGLMorphism, psi: DGLMorphism,
                   check_stability=True) -> HomotopyVerdict:
    """Is the witness a dgl morphism into the cylinder with endpoints phi
    (at t=0) and psi (at t=1)?  Exact verdict at the caps; a failure carries
    the offending generator and residual."""
    cyl = witness.cylinder()
    cert = {}
    images = {g: witness.forms.get(g, cyl.zero()) for g in witness.source.gens}
    for g in witness.source.gens:
        lhs = cyl.d(images[g])
        rhs = cyl.apply_witness(images, witness.source.d_on_gens[g])
        if lhs != rhs:
            cert["morphism"] = {"generator": g.name,
                                "residual": repr(lhs - rhs)}
            break
    if "morphism" not in cert:
        for g in witness.source.gens:
            e0 = cyl.eval_endpoint(images[g], 0)
            e1 = cyl.eval_endpoint(images[g], 1)
            if e0 != phi.images[g]:
                cert["endpoint0"] = {"generator": g.name}
                break
            if e1 != psi.images[g]:
                cert["endpoint1"] = {"generator": g.name}
                break
    ok = not cert
    stable = None
    if check_stability:
        # cap soundness: all stored polynomial degrees sit strictly below the
        # cap, so raising the cap cannot change the verdict
        top = 0
        for f in witness.forms.values():
            for (k, _), _v in f.terms.items():
                top = max(top, k)
        stable = top < witness.poly_cap
    return HomotopyVerdict(ok=ok, certificate=cert,
                           caps={"poly_cap": witness.poly_cap,
                                 "truncation": witness.target.trunc.max_bracket_length},
                           stable=stable)
