"""AST for the model-description language, with the canonical printer.

Expressions are normalized at parse time to linear combinations of atoms
with explicit rational coefficients and t-monomial prefixes, so printing
then reparsing reproduces the same tree (round-trip identity) and printing
is idempotent on arbitrary input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Br:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class ExpAd:
    inner: "Expr"      # degree-0 argument of ad
    target: "Expr"


@dataclass(frozen=True)
class Term:
    coeff: Fraction
    t_power: int = 0
    dt: bool = False
    atom: object = None    # Ref | Br | ExpAd | None (pure scalar/monomial)


@dataclass(frozen=True)
class Expr:
    terms: tuple            # tuple of Term

    def __iter__(self):
        return iter(self.terms)


def expr_of(terms):
    return Expr(tuple(t for t in terms if t.coeff))


@dataclass
class GenDecl:
    name: str
    degree: int
    pos: tuple = (0, 0)


@dataclass
class DiffDecl:
    gen: str
    expr: Expr
    pos: tuple = (0, 0)


@dataclass
class McDecl:
    name: str
    expr: Expr | None = None
    pos: tuple = (0, 0)


@dataclass
class FiltDecl:
    name: str
    levels: tuple = ()       # tuple of tuples of generator names
    pos: tuple = (0, 0)


@dataclass
class TruncDecl:
    cap: int
    max_degree: int | None = None
    pos: tuple = (0, 0)


@dataclass
class ModelNode:
    name: str
    decls: list = field(default_factory=list)
    pos: tuple = (0, 0)


@dataclass
class MorphismNode:
    name: str
    source: str
    target: str
    assigns: list = field(default_factory=list)   # (gen name, Expr, pos)
    pos: tuple = (0, 0)


@dataclass
class DerivationNode:
    name: str
    model: str
    degree: int | None = None
    assigns: list = field(default_factory=list)
    pos: tuple = (0, 0)


@dataclass
class HomotopyNode:
    name: str
    source: str
    target: str
    assigns: list = field(default_factory=list)
    pos: tuple = (0, 0)


@dataclass
class Document:
    items: list = field(default_factory=list)

    def models(self):
        return [i for i in self.items if isinstance(i, ModelNode)]

    def find(self, cls, name):
        for i in self.items:
            if isinstance(i, cls) and i.name == name:
                return i
        return None


# -- canonical printer --------------------------------------------------------

def print_rational(c: Fraction) -> str:
    return "%d/%d" % (c.numerator, c.denominator) if c.denominator != 1 \
        else "%d" % c.numerator


def print_atom(a) -> str:
    if isinstance(a, Ref):
        return a.name
    if isinstance(a, Br):
        return "[%s, %s]" % (print_expr(a.left), print_expr(a.right))
    if isinstance(a, ExpAd):
        return "exp(ad(%s))(%s)" % (print_expr(a.inner), print_expr(a.target))
    raise TypeError("unknown atom %r" % (a,))


def print_term(t: Term) -> str:
    bits = []
    if t.coeff != 1 or (t.atom is None and not t.t_power and not t.dt):
        bits.append(print_rational(t.coeff))
    if t.t_power:
        bits.append("t" if t.t_power == 1 else "t^%d" % t.t_power)
    if t.dt:
        bits.append("dt")
    if t.atom is not None:
        bits.append(print_atom(t.atom))
    return " * ".join(bits) if bits else "1"


def print_expr(e: Expr) -> str:
    if not e.terms:
        return "0"
    return " + ".join(print_term(t) for t in e.terms)


def print_document(doc: Document) -> str:
    out = []
    for item in doc.items:
        if isinstance(item, ModelNode):
            out.append("model %s {" % item.name)
            for d in item.decls:
                if isinstance(d, TruncDecl):
                    line = "  truncate %d" % d.cap
                    if d.max_degree is not None:
                        line += " degree %d" % d.max_degree
                    out.append(line)
                elif isinstance(d, GenDecl):
                    out.append("  gen %s : %d" % (d.name, d.degree))
                elif isinstance(d, DiffDecl):
                    out.append("  d %s = %s" % (d.gen, print_expr(d.expr)))
                elif isinstance(d, McDecl):
                    if d.expr is None:
                        out.append("  mc %s" % d.name)
                    else:
                        out.append("  mc %s = %s" % (d.name, print_expr(d.expr)))
                elif isinstance(d, FiltDecl):
                    levels = " | ".join(" ".join(lv) for lv in d.levels)
                    out.append("  filtration %s { %s }" % (d.name, levels))
            out.append("}")
        elif isinstance(item, MorphismNode):
            out.append("morphism %s : %s -> %s {" % (item.name, item.source,
                                                     item.target))
            for g, e, _ in item.assigns:
                out.append("  %s -> %s" % (g, print_expr(e)))
            out.append("}")
        elif isinstance(item, DerivationNode):
            head = "derivation %s : %s" % (item.name, item.model)
            if item.degree is not None:
                head += " degree %d" % item.degree
            out.append(head + " {")
            for g, e, _ in item.assigns:
                out.append("  %s -> %s" % (g, print_expr(e)))
            out.append("}")
        elif isinstance(item, HomotopyNode):
            out.append("homotopy %s : %s -> %s {" % (item.name, item.source,
                                                     item.target))
            for g, e, _ in item.assigns:
                out.append("  %s -> %s" % (g, print_expr(e)))
            out.append("}")
        out.append("")
    return "\n".join(out).rstrip() + "\n"
