"""Free graded Lie algebras over Q with bracket-length truncation.

Elements are kept in a canonical normal form: their image in the graded
tensor algebra T(V), where [a, b] = ab - (-1)^{|a||b|} ba.  This makes the
normal form sign-robust for generators of any degree (including odd ones,
where [x, x] != 0) at the price of wider expansions; desk-scale dimensions
keep it tractable.  Lie-subspace membership is certified by the graded
Dynkin bracketing idempotent, and per-(degree, length) bases are obtained
by exact elimination over left-normed bracket spanning sets.

Completion is modelled by nilpotent quotients: every element carries a
Truncation and words longer than the cap are silently dropped (the drop is
visible in truncation metadata upstream).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactlin import (IncrementalSpan, NotInSpanError, ResourceLimitError,
                       SparseMat, SparseVec, solve_linear)


class DegreeError(ValueError):
    """An element fails a homogeneity or degree requirement."""


class LieMembershipError(ValueError):
    """A tensor element that should be a Lie element is not."""


@dataclass(frozen=True)
class Generator:
    name: str
    degree: int

    def __repr__(self):
        return "%s(%d)" % (self.name, self.degree)


@dataclass(frozen=True)
class Truncation:
    """Bracket-length cap N >= 1, with an optional degree cap."""

    max_bracket_length: int
    max_degree: int | None = None

    def __post_init__(self):
        if self.max_bracket_length < 1:
            raise ValueError("truncation cap must be >= 1")

    def admits(self, word) -> bool:
        if len(word) > self.max_bracket_length:
            return False
        if self.max_degree is not None and word_degree(word) > self.max_degree:
            return False
        return True

    def bumped(self, by=1) -> "Truncation":
        return Truncation(self.max_bracket_length + by, self.max_degree)


# A word is a tuple of Generators; the empty tuple is the algebra unit and
# never appears inside a LieElement.

def word_degree(word) -> int:
    return sum(g.degree for g in word)


def _word_key(word):
    return (len(word), tuple(g.name for g in word))


class LieElement:
    """Exact-rational combination of graded tensor words.

    Supports the ambient associative operations needed by the engine; the
    Lie-subspace invariant is certified separately (is_lie) and enforced at
    the public construction sites upstream.
    """

    __slots__ = ("terms", "trunc", "label")

    def __init__(self, terms, trunc: Truncation, label=None):
        self.trunc = trunc
        self.terms = {}
        self.label = label
        for w, c in (terms.items() if isinstance(terms, dict) else terms):
            c = c if isinstance(c, Fraction) else Fraction(c)
            if c and trunc.admits(w):
                self.terms[w] = c

    @classmethod
    def zero(cls, trunc):
        return cls({}, trunc)

    @classmethod
    def gen(cls, g: Generator, trunc):
        return cls({(g,): Fraction(1)}, trunc)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self):
        """Degree when homogeneous; raises DegreeError on mixed degrees."""
        degs = {word_degree(w) for w in self.terms}
        if not degs:
            return None
        if len(degs) > 1:
            raise DegreeError("inhomogeneous element, degrees %s" % sorted(degs))
        return degs.pop()

    def is_homogeneous(self) -> bool:
        return len({word_degree(w) for w in self.terms}) <= 1

    def min_length(self):
        return min((len(w) for w in self.terms), default=None)

    def component(self, length=None, degree=None) -> "LieElement":
        out = {}
        for w, c in self.terms.items():
            if length is not None and len(w) != length:
                continue
            if degree is not None and word_degree(w) != degree:
                continue
            out[w] = c
        return LieElement(out, self.trunc)

    def truncated(self, trunc: Truncation) -> "LieElement":
        return LieElement(self.terms, trunc)

    def scale(self, c) -> "LieElement":
        c = c if isinstance(c, Fraction) else Fraction(c)
        return LieElement({w: v * c for w, v in self.terms.items()}, self.trunc)

    def __add__(self, other: "LieElement") -> "LieElement":
        out = dict(self.terms)
        for w, c in other.terms.items():
            s = out.get(w, Fraction(0)) + c
            if s:
                out[w] = s
            else:
                out.pop(w, None)
        res = LieElement.zero(self.trunc)
        res.terms = {w: c for w, c in out.items() if self.trunc.admits(w)}
        return res

    def __sub__(self, other: "LieElement") -> "LieElement":
        return self + other.scale(-1)

    def __neg__(self) -> "LieElement":
        return self.scale(-1)

    def __eq__(self, other) -> bool:
        return isinstance(other, LieElement) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: _word_key(t[0]))

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for w, c in self.sorted_terms()[:8]:
            bits.append("%s*%s" % (c, ".".join(g.name for g in w)))
        if len(self.terms) > 8:
            bits.append("...")
        return " + ".join(bits)


def _mul_terms(a, b, trunc):
    """Concatenation product of word dictionaries (allows the empty word)."""
    out = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            w = wa + wb
            if not trunc.admits(w) and w:
                continue
            s = out.get(w, Fraction(0)) + ca * cb
            if s:
                out[w] = s
            else:
                out.pop(w, None)
    return out


def bracket(a: LieElement, b: LieElement) -> LieElement:
    """Graded bracket [a, b] = ab - (-1)^{|a||b|} ba, computed wordwise."""
    trunc = a.trunc
    out = {}
    for wa, ca in a.terms.items():
        da = word_degree(wa)
        for wb, cb in b.terms.items():
            if len(wa) + len(wb) > trunc.max_bracket_length:
                continue
            db = word_degree(wb)
            w1 = wa + wb
            w2 = wb + wa
            coeff = ca * cb
            sign = -coeff if (da * db) % 2 == 0 else coeff
            for w, c in ((w1, coeff), (w2, sign)):
                if trunc.max_degree is not None and word_degree(w) > trunc.max_degree:
                    continue
                s = out.get(w, Fraction(0)) + c
                if s:
                    out[w] = s
                else:
                    out.pop(w, None)
    res = LieElement.zero(trunc)
    res.terms = out
    return res


def mul(a: LieElement, b: LieElement) -> LieElement:
    """Tensor-algebra product (not a Lie operation; enveloping plumbing)."""
    res = LieElement.zero(a.trunc)
    res.terms = {w: c for w, c in _mul_terms(a.terms, b.terms, a.trunc).items() if w}
    return res


def exp_terms(x: LieElement):
    """exp(x) in the truncated tensor algebra; includes the empty word."""
    trunc = x.trunc
    out = {(): Fraction(1)}
    power = {(): Fraction(1)}
    k = 0
    while True:
        k += 1
        power = _mul_terms(power, x.terms, trunc)
        if not power:
            break
        fact = Fraction(1)
        for i in range(2, k + 1):
            fact *= i
        for w, c in power.items():
            s = out.get(w, Fraction(0)) + c / fact
            if s:
                out[w] = s
            else:
                out.pop(w, None)
    return out


def log_terms(u, trunc) -> LieElement:
    """log(u) for u = 1 + (higher words) in the truncated tensor algebra."""
    if u.get((), Fraction(0)) != 1:
        raise LieMembershipError("log argument must have unit constant term")
    v = {w: c for w, c in u.items() if w}
    out = {}
    power = {(): Fraction(1)}
    n = 0
    while True:
        n += 1
        power = _mul_terms(power, v, trunc)
        if not power:
            break
        sign = Fraction(1, n) if n % 2 == 1 else Fraction(-1, n)
        for w, c in power.items():
            s = out.get(w, Fraction(0)) + c * sign
            if s:
                out[w] = s
            else:
                out.pop(w, None)
    res = LieElement.zero(trunc)
    res.terms = out
    return res


def dynkin(e: LieElement) -> LieElement:
    """Right-nested bracketing map w = x1...xn -> [x1,[x2,[...,xn]]].

    On the length-n Lie component it acts as multiplication by n (graded
    Dynkin-Specht-Wever), which certifies Lie-subspace membership.
    """
    trunc = e.trunc
    total = LieElement.zero(trunc)
    for w, c in e.terms.items():
        cur = LieElement({(w[-1],): Fraction(1)}, trunc)
        for g in reversed(w[:-1]):
            cur = bracket(LieElement.gen(g, trunc), cur)
        total = total + cur.scale(c)
    return total


def is_lie(e: LieElement) -> bool:
    """Exact Lie-subspace membership via the Dynkin idempotent."""
    by_len = {}
    for w, c in e.terms.items():
        by_len.setdefault(len(w), {})[w] = c
    for n, terms in by_len.items():
        comp = LieElement.zero(e.trunc)
        comp.terms = dict(terms)
        if dynkin(comp) != comp.scale(n):
            return False
    return True


def gen_sequences(gens, degree, length):
    """All generator sequences of the given length and total degree, in
    lexicographic order by position in gens."""
    if not gens:
        return []
    out = []
    degs = [g.degree for g in gens]
    lo, hi = min(degs), max(degs)

    def rec(prefix, deg_left, slots):
        if slots == 0:
            if deg_left == 0:
                out.append(tuple(prefix))
            return
        if deg_left < slots * lo or deg_left > slots * hi:
            return
        for g in gens:
            prefix.append(g)
            rec(prefix, deg_left - g.degree, slots - 1)
            prefix.pop()

    rec([], degree, length)
    return out


def left_normed(seq, trunc) -> LieElement:
    """[g1,[g2,[...,[g_{k-1}, g_k]]]] for a generator sequence."""
    cur = LieElement.gen(seq[-1], trunc)
    for g in reversed(seq[:-1]):
        cur = bracket(LieElement.gen(g, trunc), cur)
    return cur


def bracket_label(seq) -> str:
    if len(seq) == 1:
        return seq[0].name
    return "[%s,%s]" % (seq[0].name, bracket_label(seq[1:]))


_basis_cache = {}

_RESOURCE_LIMIT = None


def set_resource_limit(n):
    """Global per-degree basis-size guard (workbench wires the env var)."""
    global _RESOURCE_LIMIT
    _RESOURCE_LIMIT = n


def lie_basis(gens, degree, length, trunc: Truncation, resource_limit=None):
    """Ordered basis of the (degree, length)-homogeneous component.

    Deterministic: left-normed spanning brackets are enumerated in
    lexicographic generator order and kept when they add rank.  Returned
    elements carry a bracket-expression label.
    """
    if length > trunc.max_bracket_length:
        raise ValueError("length %d exceeds truncation %d" % (length, trunc.max_bracket_length))
    if resource_limit is None:
        resource_limit = _RESOURCE_LIMIT
    key = (tuple(gens), degree, length)
    cached = _basis_cache.get(key)
    if cached is not None:
        if resource_limit is not None and len(cached) > resource_limit:
            raise ResourceLimitError(
                "basis size exceeds resource limit %d" % resource_limit)
        return [LieElement(e.terms, trunc, label=e.label) for e in cached]

    seqs = gen_sequences(gens, degree, length)
    word_index = {}
    span = IncrementalSpan()
    picked = []
    for seq in seqs:
        e = left_normed(seq, Truncation(length))
        if e.is_zero():
            continue
        vec = {}
        for w, c in e.terms.items():
            if w not in word_index:
                word_index[w] = len(word_index)
            vec[word_index[w]] = c
        v = SparseVec()
        v.entries = vec
        if span.add(v):
            e.label = bracket_label(seq)
            picked.append(e)
            if resource_limit is not None and len(picked) > resource_limit:
                raise ResourceLimitError(
                    "basis size exceeds resource limit %d" % resource_limit)
    _basis_cache[key] = picked
    return [LieElement(e.terms, trunc, label=e.label) for e in picked]


class Coordinatizer:
    """Repeated exact coordinate extraction against a fixed basis.

    A pivot set of words is chosen once and the corresponding square system
    is inverted; each query is then a small matrix-vector product plus a
    full verification pass (so not-in-span inputs are still caught).
    """

    def __init__(self, basis):
        self.basis = list(basis)
        self.word_index = {}
        for be in self.basis:
            for w in be.terms:
                self.word_index.setdefault(w, len(self.word_index))
        n = len(self.basis)
        # find pivot words via incremental elimination on the transpose
        span = IncrementalSpan()
        piv_words = []
        cols = [{self.word_index[w]: c for w, c in be.terms.items()} for be in self.basis]
        for widx in range(len(self.word_index)):
            row = SparseVec({j: cols[j].get(widx, Fraction(0)) for j in range(n)
                             if cols[j].get(widx)})
            if span.add(row):
                piv_words.append(widx)
            if len(piv_words) == n:
                break
        if len(piv_words) != n:
            raise NotInSpanError("basis is linearly dependent")
        self.piv_words = piv_words
        # dense inverse of the n x n pivot submatrix (rows = pivot words)
        M = [[cols[j].get(w, Fraction(0)) for j in range(n)] for w in piv_words]
        inv = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        for c in range(n):
            piv = next(r for r in range(c, n) if M[r][c])
            M[c], M[piv] = M[piv], M[c]
            inv[c], inv[piv] = inv[piv], inv[c]
            pv = M[c][c]
            M[c] = [v / pv for v in M[c]]
            inv[c] = [v / pv for v in inv[c]]
            for r in range(n):
                if r != c and M[r][c]:
                    f = M[r][c]
                    M[r] = [v - f * w2 for v, w2 in zip(M[r], M[c])]
                    inv[r] = [v - f * w2 for v, w2 in zip(inv[r], inv[c])]
        self.inv = inv
        self.piv_pos = {w: i for i, w in enumerate(piv_words)}

    def coords(self, e: LieElement) -> SparseVec:
        if e.is_zero():
            return SparseVec()
        n = len(self.basis)
        rhs = [Fraction(0)] * n
        for w, c in e.terms.items():
            widx = self.word_index.get(w)
            if widx is None:
                raise NotInSpanError("word %s outside basis span" % (w,))
            pos = self.piv_pos.get(widx)
            if pos is not None:
                rhs[pos] = c
        x = [sum((self.inv[i][j] * rhs[j] for j in range(n) if rhs[j]), Fraction(0))
             for i in range(n)]
        # verify on all words
        recon = {}
        for j, be in enumerate(self.basis):
            if not x[j]:
                continue
            for w, c in be.terms.items():
                s = recon.get(w, Fraction(0)) + x[j] * c
                if s:
                    recon[w] = s
                else:
                    recon.pop(w, None)
        if recon != e.terms:
            raise NotInSpanError("element outside basis span")
        return SparseVec({i: v for i, v in enumerate(x) if v})


def coordinates(e: LieElement, basis) -> SparseVec:
    """Exact coordinates of e in the given basis (error if not in span)."""
    if e.is_zero():
        return SparseVec()
    word_index = {}
    for be in basis:
        for w in be.terms:
            word_index.setdefault(w, len(word_index))
    for w in e.terms:
        if w not in word_index:
            raise NotInSpanError("word %s outside basis span" % (w,))
    cols = []
    for be in basis:
        cols.append(SparseVec({word_index[w]: c for w, c in be.terms.items()}))
    A = SparseMat.from_columns(len(word_index), cols)
    b = SparseVec({word_index[w]: c for w, c in e.terms.items()})
    x = solve_linear(A, b)
    if x is None:
        raise NotInSpanError("element outside basis span")
    return x
