"""Differential graded Lie algebras on free truncated presentations.

Differentials and morphisms are stored by their values on generators and
extended by the graded Leibniz / multiplicativity rules inside the tensor
algebra.  All series (exponentials, logarithms, BCH, the gauge action) are
finite in the nilpotent quotient fixed by the truncation; divergence of a
non-filtration-increasing series is detected and reported rather than
silently truncated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import exactlin
from .exactlin import (GradedChainComplex, IncrementalSpan, SparseMat,
                       SparseVec, solve_linear)
from .freelie import (DegreeError, Generator, LieElement, LieMembershipError,
                      Truncation, bracket, exp_terms, is_lie, lie_basis,
                      log_terms, word_degree)


class IllFormedDifferentialError(ValueError):
    """d^2 != 0; carries the offending generator and a witness term."""

    def __init__(self, gen, residue):
        self.gen = gen
        self.residue = residue
        length = residue.min_length()
        super().__init__("d^2 != 0 on generator %s (first nonzero bracket length %s)"
                         % (gen.name, length))


class MCViolationError(ValueError):
    """An element fails the Maurer-Cartan equation."""


class DivergenceError(ValueError):
    """A series (exp/log) does not terminate at the current truncation."""


def apply_operator(values, op_degree, e: LieElement, phi=None, phi2=None) -> LieElement:
    """Extend generator values to a (twisted) derivation and apply it.

    values: Generator -> LieElement in the TARGET algebra.
    phi/phi2: optional morphism images (Generator -> LieElement) used on the
    left/right of the derivation slot; both default to the identity, giving
    an ordinary derivation.  With phi = phi2 = f this is an f-derivation:
    theta(ab) = theta(a) f(b) + (-1)^{|theta||a|} f(a) theta(b).
    """
    trunc = e.trunc
    out = LieElement.zero(trunc)
    for w, c in e.terms.items():
        n = len(w)
        for i in range(n):
            val = values.get(w[i])
            if val is None or val.is_zero():
                continue
            prefix_deg = word_degree(w[:i])
            sign = Fraction(-1) if (op_degree * prefix_deg) % 2 else Fraction(1)
            # left part: phi images of w[:i]; right: phi2 images of w[i+1:]
            terms = {(): c * sign}
            ok = True
            for j in range(i):
                g = w[j]
                img = {(g,): Fraction(1)} if phi is None else phi[g].terms
                terms = _mul_dict(terms, img, trunc)
                if not terms:
                    ok = False
                    break
            if not ok:
                continue
            terms = _mul_dict(terms, val.terms, trunc)
            for j in range(i + 1, n):
                if not terms:
                    break
                g = w[j]
                img = {(g,): Fraction(1)} if phi2 is None else phi2[g].terms
                terms = _mul_dict(terms, img, trunc)
            for ww, cc in terms.items():
                if not ww:
                    continue
                s = out.terms.get(ww, Fraction(0)) + cc
                if s:
                    out.terms[ww] = s
                else:
                    out.terms.pop(ww, None)
    return out


def _mul_dict(a, b, trunc):
    out = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            w = wa + wb
            if w and not trunc.admits(w):
                continue
            s = out.get(w, Fraction(0)) + ca * cb
            if s:
                out[w] = s
            else:
                out.pop(w, None)
    return out


def apply_morphism(images, e: LieElement, trunc=None) -> LieElement:
    """Apply the multiplicative extension of generator images to e."""
    trunc = trunc or e.trunc
    out = LieElement.zero(trunc)
    for w, c in e.terms.items():
        terms = {(): c}
        for g in w:
            terms = _mul_dict(terms, images[g].terms, trunc)
            if not terms:
                break
        for ww, cc in terms.items():
            if not ww:
                continue
            s = out.terms.get(ww, Fraction(0)) + cc
            if s:
                out.terms[ww] = s
            else:
                out.terms.pop(ww, None)
    return out


class DGLPresentation:
    """Free truncated dgl (L = hat-L(V)/length > N, d) given on generators."""

    def __init__(self, gens, d_on_gens, trunc: Truncation, mc_gens=(), name=None):
        self.gens = tuple(gens)
        self.trunc = trunc
        self.d_on_gens = {g: d_on_gens.get(g, LieElement.zero(trunc)).truncated(trunc)
                          for g in self.gens}
        self.mc_gens = tuple(mc_gens)
        self.name = name
        self._basis_cache = {}
        self._coordizer_cache = {}
        self._gen_elements = {g: LieElement.gen(g, trunc) for g in self.gens}

    # -- element plumbing -------------------------------------------------

    def zero(self) -> LieElement:
        return LieElement.zero(self.trunc)

    def gen(self, name_or_gen) -> LieElement:
        if isinstance(name_or_gen, Generator):
            return self._gen_elements[name_or_gen]
        for g in self.gens:
            if g.name == name_or_gen:
                return self._gen_elements[g]
        raise KeyError("unknown generator %r" % name_or_gen)

    def generator(self, name) -> Generator:
        for g in self.gens:
            if g.name == name:
                return g
        raise KeyError("unknown generator %r" % name)

    def d(self, e: LieElement) -> LieElement:
        return apply_operator(self.d_on_gens, -1, e)

    def bracket(self, a, b):
        return bracket(a, b)

    # -- bases and complexes ----------------------------------------------

    def basis(self, degree, resource_limit=None):
        """Ordered basis of the degree-homogeneous part, all lengths <= cap."""
        cached = self._basis_cache.get(degree)
        if cached is None:
            cached = []
            for ln in range(1, self.trunc.max_bracket_length + 1):
                cached.extend(lie_basis(self.gens, degree, ln, self.trunc,
                                        resource_limit=resource_limit))
            self._basis_cache[degree] = cached
        return cached

    def degree_bounds(self):
        """Smallest/largest degrees that can occur at this truncation."""
        if not self.gens:
            return 0, 0
        degs = [g.degree for g in self.gens]
        lo, hi = min(degs), max(degs)
        N = self.trunc.max_bracket_length
        low = lo if lo >= 0 else lo * N
        high = hi if hi <= 0 else hi * N
        return low, high

    def coords(self, e: LieElement, degree) -> SparseVec:
        if e.is_zero():
            return SparseVec()
        coordizer = self._coordizer_cache.get(degree)
        if coordizer is None:
            from .freelie import Coordinatizer
            coordizer = Coordinatizer(self.basis(degree))
            self._coordizer_cache[degree] = coordizer
        return coordizer.coords(e)

    def from_coords(self, vec: SparseVec, degree) -> LieElement:
        basis = self.basis(degree)
        out = self.zero()
        for i, c in vec.entries.items():
            out = out + basis[i].scale(c)
        return out

    def complex(self, degrees, d_values=None) -> GradedChainComplex:
        """Underlying chain complex on the given degrees.

        d_values overrides the differential's generator values (used for
        perturbed differentials).
        """
        degrees = sorted(degrees)
        dvals = self.d_on_gens if d_values is None else d_values
        basis = {}
        labels = {}
        for n in degrees + [degrees[0] - 1]:
            b = self.basis(n)
            basis[n] = b
            labels[n] = [be.label or ("e%d_%d" % (n, i)) for i, be in enumerate(b)]
        boundary = {}
        for n in degrees:
            if not basis[n]:
                continue
            cols = []
            for be in basis[n]:
                img = apply_operator(dvals, -1, be)
                cols.append(self.coords(img, n - 1) if not img.is_zero()
                            else SparseVec())
            boundary[n] = SparseMat.from_columns(len(basis[n - 1]), cols)
        meta = {"truncation": self.trunc.max_bracket_length, "model": self.name or ""}
        return GradedChainComplex({n: labels[n] for n in labels}, boundary, meta)

    # -- validation ---------------------------------------------------------

    def validate(self):
        for g in self.gens:
            if g.degree < -1:
                raise DegreeError("generator %s has degree < -1" % g.name)
        for g, val in self.d_on_gens.items():
            if not val.is_zero() and val.degree() != g.degree - 1:
                raise DegreeError("d(%s) must be homogeneous of degree %d"
                                  % (g.name, g.degree - 1))
            if not is_lie(val):
                raise LieMembershipError("d(%s) is not a Lie element" % g.name)
        for g in self.gens:
            res = self.d(self.d_on_gens[g])
            if not res.is_zero():
                raise IllFormedDifferentialError(g, res)
        for g in self.mc_gens:
            ok, res = check_mc(self, self.gen(g))
            if not ok:
                name = g.name if isinstance(g, Generator) else g
                raise MCViolationError("declared MC generator %s fails MC, residue %r"
                                       % (name, res))
        return self


def build_dgl(gens, d_on_gens, trunc, mc_gens=(), name=None) -> DGLPresentation:
    return DGLPresentation(gens, d_on_gens, trunc, mc_gens, name).validate()


class DGLMorphism:
    """Morphism of presentations given by generator images (degree 0)."""

    def __init__(self, source: DGLPresentation, target: DGLPresentation, images,
                 name=None):
        self.source = source
        self.target = target
        self.images = {g: images.get(g, LieElement.zero(target.trunc))
                       for g in source.gens}
        self.name = name

    @classmethod
    def identity(cls, L: DGLPresentation):
        return cls(L, L, {g: L.gen(g) for g in L.gens}, name="id")

    @classmethod
    def zero_morphism(cls, source, target):
        return cls(source, target, {}, name="0")

    def apply(self, e: LieElement) -> LieElement:
        return apply_morphism(self.images, e, self.target.trunc)

    def compose(self, other: "DGLMorphism") -> "DGLMorphism":
        """self after other."""
        images = {g: self.apply(img) for g, img in other.images.items()}
        return DGLMorphism(other.source, self.target, images)

    def validate(self):
        for g in self.source.gens:
            img = self.images[g]
            if not img.is_zero() and img.degree() != g.degree:
                raise DegreeError("image of %s is not degree %d" % (g.name, g.degree))
            if not is_lie(img):
                raise LieMembershipError("image of %s is not a Lie element" % g.name)
        for g in self.source.gens:
            lhs = self.apply(self.source.d_on_gens[g])
            rhs = self.target.d(self.images[g])
            if lhs != rhs:
                raise IllFormedDifferentialError(g, lhs - rhs)
        return self

    def __eq__(self, other):
        return (isinstance(other, DGLMorphism) and self.source is other.source
                and self.target is other.target and self.images == other.images)


@dataclass
class MCElement:
    owner: DGLPresentation
    value: LieElement

    def __post_init__(self):
        ok, res = check_mc(self.owner, self.value)
        if not ok:
            raise MCViolationError("MC residue %r" % res)


def check_mc(L: DGLPresentation, a: LieElement):
    """Does a satisfy da + [a,a]/2 = 0 at the truncation?  Returns (ok, residue)."""
    if not a.is_zero() and a.degree() != -1:
        raise DegreeError("MC candidates must be homogeneous of degree -1")
    res = L.d(a) + bracket(a, a).scale(Fraction(1, 2))
    return res.is_zero(), res


def perturbed(L: DGLPresentation, a) -> DGLPresentation:
    """(L, d_a) with d_a = d + ad_a for an MC element a."""
    value = a.value if isinstance(a, MCElement) else a
    ok, res = check_mc(L, value)
    if not ok:
        raise MCViolationError("cannot perturb at non-MC element, residue %r" % res)
    d_new = {g: L.d_on_gens[g] + bracket(value, L.gen(g)) for g in L.gens}
    return DGLPresentation(L.gens, d_new, L.trunc,
                           name=(L.name or "L") + "^perturbed").validate()


def component_complex(L: DGLPresentation, a, degrees, connective=0) -> GradedChainComplex:
    """Complex of the connected cover (at `connective`) of (L, d_a)."""
    La = perturbed(L, a) if a is not None else L
    degrees = sorted(set(list(degrees) + [connective]))
    degrees = [n for n in degrees if n >= connective]
    C = La.complex(degrees)
    return exactlin.connected_cover(C, connective)


def perturb_and_component(L: DGLPresentation, a, degrees, connective=0):
    """(L, d_a) together with the complex of its connected cover L^a."""
    La = perturbed(L, a)
    return La, component_complex(L, a, degrees, connective=connective)


# -- BCH, exp/log, gauge --------------------------------------------------

def bch(x: LieElement, y: LieElement) -> LieElement:
    """log(exp x exp y) in the truncated tensor algebra, certified Lie."""
    for e in (x, y):
        if not e.is_zero() and e.degree() != 0:
            raise DegreeError("BCH arguments must be degree 0")
    prod = _mul_dict(exp_terms(x), exp_terms(y), x.trunc)
    out = log_terms(prod, x.trunc)
    if not is_lie(out):
        raise LieMembershipError("BCH result fails Lie membership (internal error)")
    return out


def _nilpotent_iterates(apply_once, seed: LieElement, max_iter):
    """[seed, T seed, T^2 seed, ...] until zero; DivergenceError if too long."""
    out = []
    cur = seed
    count = 0
    while not cur.is_zero():
        out.append(cur)
        cur = apply_once(cur)
        count += 1
        if count > max_iter:
            raise DivergenceError("series does not terminate at this truncation")
    return out


def _max_iterations(L: DGLPresentation):
    # a filtration-increasing operator on the truncated algebra is nilpotent
    # with index bounded by cap * (number of filtration levels + 1); the cap
    # alone works for bracket-length-increasing operators, generator
    # filtrations are finite chains, so this generous bound is safe
    return L.trunc.max_bracket_length * (len(L.gens) + 2) + 4


def exp_derivation_values(L: DGLPresentation, values, check_cycle=True) -> DGLMorphism:
    """e^theta as an automorphism of L, for a degree-0 derivation theta given
    by generator values; theta must be nilpotent at the truncation."""
    def once(e):
        return apply_operator(values, 0, e)

    images = {}
    max_iter = _max_iterations(L)
    for g in L.gens:
        total = L.gen(g)
        term = L.gen(g)
        k = 0
        while True:
            k += 1
            term = once(term)
            if term.is_zero():
                break
            if k > max_iter:
                raise DivergenceError("exp of non-filtration-increasing derivation")
            fact = Fraction(1)
            for i in range(2, k + 1):
                fact *= i
            total = total + term.scale(Fraction(1, fact))
        images[g] = total
    phi = DGLMorphism(L, L, images, name="exp")
    if check_cycle:
        # commuting with d amounts to D(theta) = 0; the morphism identity
        # checked by validate() is the operative contract
        phi.validate()
    return phi


def log_morphism(phi: DGLMorphism):
    """Derivation values log(phi) for an automorphism with (phi - id)
    filtration-increasing; standard series sum (-1)^{n+1} (phi-id)^n / n."""
    L = phi.source
    if phi.target is not L:
        raise ValueError("log expects an automorphism")

    def fminusid(e):
        return phi.apply(e) - e

    values = {}
    max_iter = _max_iterations(L)
    for g in L.gens:
        total = L.zero()
        term = L.gen(g)
        k = 0
        while True:
            k += 1
            term = fminusid(term)
            if term.is_zero():
                break
            if k > max_iter:
                raise DivergenceError("log of non-unipotent automorphism")
            total = total + term.scale(Fraction((-1) ** (k + 1), k))
        values[g] = total
    return values


def ad_values(L: DGLPresentation, x: LieElement):
    """Generator values of ad_x."""
    return {g: bracket(x, L.gen(g)) for g in L.gens}


def exp_ad(L: DGLPresentation, x: LieElement) -> DGLMorphism:
    return exp_derivation_values(L, ad_values(L, x), check_cycle=False)


def gauge_act(x: LieElement, a) -> MCElement:
    """Gauge action of a degree-0 element on an MC element."""
    owner = a.owner
    value = a.value
    if not x.is_zero() and x.degree() != 0:
        raise DegreeError("gauge actor must be degree 0")
    adx = ad_values(owner, x)

    def once(e):
        return apply_operator(adx, 0, e)

    max_iter = _max_iterations(owner)
    # sum_i ad_x^i(a)/i!
    total = owner.zero()
    term = value
    fact = Fraction(1)
    i = 0
    while not term.is_zero():
        total = total + term.scale(Fraction(1, fact))
        i += 1
        fact *= i
        term = once(term)
        if i > max_iter:
            raise DivergenceError("gauge series did not terminate")
    # - sum_i ad_x^i(dx)/(i+1)!
    term = owner.d(x)
    i = 0
    fact = Fraction(1)
    while not term.is_zero():
        total = total - term.scale(Fraction(1, fact * (i + 1)))
        i += 1
        fact *= i
        term = once(term)
        if i > max_iter:
            raise DivergenceError("gauge series did not terminate")
    try:
        return MCElement(owner, total)
    except MCViolationError as exc:
        raise MCViolationError("gauge output violates MC (truncation inconsistency): %s"
                               % exc) from exc


@dataclass
class GaugeResult:
    witness: LieElement | None
    level: int
    failed_stage: int | None = None

    @property
    def equivalent(self):
        return self.witness is not None


def gauge_equivalent(a: MCElement, b: MCElement) -> GaugeResult:
    """Decide x gauge a = b by lifting x through bracket-length stages.

    Stage n is linear: with residue R = (x gauge a) - b supported in lengths
    >= n, progress requires z in L_0 with [d_b z]_{<n} = 0 and
    [d_b z]_n = R_n, using the exact displacement identity
    z gauge b - b = -((e^{ad_z}-1)/ad_z)(d_b z).  Unsolvable stage = certified
    NO at this truncation level.
    """
    L = a.owner
    N = L.trunc.max_bracket_length
    Lb = perturbed(L, b)

    basis0 = L.basis(0)
    basis_m1 = L.basis(-1)
    if not basis_m1:
        # no degree -1 at all: only a = b possible
        same = (a.value == b.value)
        return GaugeResult(L.zero() if same else None, N, None if same else 1)

    # columns: d_b of each degree-0 basis element, in degree -1 coordinates
    cols = [L.coords(Lb.d(e), -1) for e in basis0]
    # row index layout: group degree -1 basis by bracket length for staging
    len_of = {i: be.min_length() for i, be in enumerate(basis_m1)}

    witness = L.zero()
    for stage in range(1, N + 1):
        res = gauge_act(witness, a).value - b.value
        if res.is_zero():
            break
        rn = res.component(length=stage)
        if rn.is_zero():
            continue
        target = L.coords(rn, -1)
        # linear system: [d_b z]_k = 0 for k < stage, = R_n at k = stage
        rows = [i for i, ln in len_of.items() if ln is not None and ln <= stage]
        row_map = {i: k for k, i in enumerate(sorted(rows))}
        entries = {}
        for j, col in enumerate(cols):
            for i, v in col.entries.items():
                k = row_map.get(i)
                if k is not None:
                    entries[(k, j)] = v
        A = SparseMat(len(row_map), len(basis0), entries)
        rhs = SparseVec({row_map[i]: v for i, v in target.entries.items()
                         if i in row_map})
        sol = solve_linear(A, rhs)
        if sol is None:
            return GaugeResult(None, N, stage)
        z = L.zero()
        for j, c in sol.entries.items():
            z = z + basis0[j].scale(c)
        witness = bch(z, witness)
    final = gauge_act(witness, a).value - b.value
    if not final.is_zero():
        return GaugeResult(None, N, final.min_length())
    return GaugeResult(witness, N)


# -- H0 as a group ----------------------------------------------------------

@dataclass
class H0Group:
    """H_0 with the BCH product, as the cap-N Malcev approximation."""

    owner: DGLPresentation
    reps: list                     # cycle LieElements representing the basis
    boundary_span: IncrementalSpan  # span of boundaries (+ any extra quotient)
    basis0: list
    structure: dict = field(default_factory=dict)
    nilpotency_class: int = 0
    abelian: bool = True
    truncation_level: int = 0
    labels: list = field(default_factory=list)
    _rep_matrix: SparseMat | None = None

    @property
    def dimension(self):
        return len(self.reps)

    def class_of(self, e: LieElement) -> SparseVec:
        """Coordinates of the class of a degree-0 cycle in the rep basis."""
        vec = self.owner.coords(e, 0) if not e.is_zero() else SparseVec()
        reduced = self.boundary_span.reduce(vec)
        if self._rep_matrix is None:
            cols = [self.boundary_span.reduce(self.owner.coords(r, 0))
                    for r in self.reps]
            self._rep_matrix = SparseMat.from_columns(len(self.basis0), cols)
        x = solve_linear(self._rep_matrix, reduced)
        if x is None:
            raise exactlin.NotInSpanError("not a class in this H0")
        return x

    def element(self, coords: SparseVec) -> LieElement:
        out = self.owner.zero()
        for i, c in coords.entries.items():
            out = out + self.reps[i].scale(c)
        return out

    def mul(self, u: SparseVec, v: SparseVec) -> SparseVec:
        return self.class_of(bch(self.element(u), self.element(v)))

    def power(self, u: SparseVec, lam) -> SparseVec:
        """Exact Q-power: lambda . [x] = [lambda x]."""
        return self.class_of(self.element(u).scale(Fraction(lam)))

    def inverse(self, u: SparseVec) -> SparseVec:
        return self.class_of(self.element(u).scale(-1))


def h0_group(L: DGLPresentation, extra_quotient=()) -> H0Group:
    """H_0(L) with BCH structure constants at the truncation.

    extra_quotient: additional degree-0 cycles to quotient by (used for
    H_0(Der^G)/Im H_0(ad) style groups)."""
    basis0 = L.basis(0)
    basis_p1 = L.basis(1)
    if basis0:
        cols = [L.coords(L.d(e), -1) for e in basis0]
        dmat = SparseMat.from_columns(len(L.basis(-1)), cols)
        cycles = exactlin.kernel_basis(dmat)
    else:
        cycles = []

    def reduction_span():
        span = IncrementalSpan()
        for e in basis_p1:
            img = L.d(e)
            if not img.is_zero():
                span.add(L.coords(img, 0))
        for e in extra_quotient:
            if not e.is_zero():
                span.add(L.coords(e, 0))
        return span

    span = reduction_span()
    reps = []
    for z in cycles:
        if span.add(z):
            reps.append(L.from_coords(z, 0))
    # reduction span without the reps (span.add mutated it above)
    group = H0Group(owner=L, reps=reps, boundary_span=reduction_span(),
                    basis0=basis0,
                    truncation_level=L.trunc.max_bracket_length,
                    labels=["h%d" % i for i in range(len(reps))])
    # BCH structure constants and induced Lie brackets
    n = len(reps)
    abelian = True
    for i in range(n):
        for j in range(n):
            prod = group.class_of(bch(reps[i], reps[j]))
            group.structure[(i, j)] = prod
    # nilpotency class of the induced Lie algebra on H0
    layer = [group.class_of(bracket(reps[i], reps[j]))
             for i in range(n) for j in range(n)]
    layer = [v for v in layer if not v.is_zero()]
    abelian = not layer
    cls = 1 if reps else 0
    seen = 0
    while layer and seen < n + 2:
        cls += 1
        seen += 1
        nxt = []
        for v in layer:
            ev = group.element(v)
            for i in range(n):
                w = group.class_of(bracket(reps[i], ev))
                if not w.is_zero():
                    nxt.append(w)
        layer = nxt
    group.abelian = abelian
    group.nilpotency_class = cls
    return group


def act_on_morphism(y: LieElement, phi: DGLMorphism) -> DGLMorphism:
    """[y] . [phi] = e^{ad_y} after phi; y must be a degree-0 cycle of the
    target."""
    L = phi.target
    if not L.d(y).is_zero():
        raise MCViolationError("action requires a degree-0 cycle")
    e = exp_ad(L, y)
    return e.compose(phi).validate()


def postnikov_truncate(C: GradedChainComplex, n: int) -> GradedChainComplex:
    return exactlin.postnikov_truncate(C, n)


@dataclass(frozen=True)
class GeneratorFiltration:
    """Descending chain V = V^0 > V^1 > ... > V^q = 0 of generator subsets."""

    levels: tuple  # tuple of frozensets of Generator, starting at V^0

    def __post_init__(self):
        prev = None
        for lv in self.levels:
            if prev is not None and not lv < prev:
                raise ValueError("filtration must strictly descend")
            prev = lv
        if self.levels and self.levels[-1]:
            raise ValueError("filtration must end at 0")

    @classmethod
    def from_chain(cls, chain):
        levels = [frozenset(lv) for lv in chain]
        if not levels or levels[-1]:
            levels.append(frozenset())
        return cls(tuple(levels))

    def level_of(self, g: Generator) -> int:
        """Largest i with g in V^i."""
        if not self.levels or g not in self.levels[0]:
            raise ValueError("generator %s not in the filtration's V^0" % g.name)
        lvl = 0
        for i, lv in enumerate(self.levels):
            if g in lv:
                lvl = i
        return lvl

    def next_level(self, i):
        return self.levels[i + 1] if i + 1 < len(self.levels) else frozenset()
