"""Task orchestration: validated parameters in, deterministic reports out.

Homology-bearing tasks recompute their tables at cap + 1 and compare, which
is what the stability flag certifies.  Resource-limit overruns downgrade
the report instead of crashing.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

from ..cylinder import CapExceededError, check_homotopy
from ..derivations import (GSpec, classifying_invariants, gamma_check,
                           mapping_space_pi)
from ..dgl import (DGLMorphism, MCElement, bch, gauge_act, gauge_equivalent,
                   h0_group, log_morphism, exp_derivation_values)
from ..exactlin import ResourceLimitError, homology_at
from ..freelie import set_resource_limit
from .elaborate import (ElaborationError, eval_expr, load_model,
                        workspace_from_text)
from .parser import Diagnostic
from .report import Report

DEFAULT_RESOURCE_LIMIT = 20000


@dataclass
class Task:
    command: str
    model_ref: str | None = None
    file_text: str | None = None
    trunc: int | None = None
    word_cap: int = 3
    poly_cap: int = 6
    degree_range: tuple | None = None
    gspec: str = "identity"
    exprs: dict = field(default_factory=dict)    # named expression strings
    names: dict = field(default_factory=dict)    # named object references
    check_stability: bool = True

    def echo(self):
        bits = ["cdgl", self.command]
        if self.model_ref:
            bits.append("--model %s" % self.model_ref)
        if self.trunc:
            bits.append("--truncate %d" % self.trunc)
        if self.degree_range:
            bits.append("--range %d..%d" % self.degree_range)
        if self.command in ("baut", "bautstar"):
            bits.append("--gspec %s" % self.gspec)
        for k in sorted(self.exprs):
            bits.append("--%s %r" % (k, self.exprs[k]))
        for k in sorted(self.names):
            bits.append("--%s %s" % (k, self.names[k]))
        return " ".join(bits)


def _resource_limit():
    raw = os.environ.get("CDGL_RESOURCE_LIMIT", "")
    try:
        return int(raw) if raw else DEFAULT_RESOURCE_LIMIT
    except ValueError:
        return DEFAULT_RESOURCE_LIMIT


def _load(task: Task, trunc_override=None):
    """Workspace (possibly empty) + resolved model presentation."""
    cap = trunc_override or task.trunc
    ws = None
    if task.file_text is not None:
        ws, _doc = workspace_from_text(task.file_text, truncation_override=cap)
    L = None
    if task.model_ref:
        L = load_model(task.model_ref, truncation=cap, workspace=ws)
    elif ws is not None and len(ws.models) == 1:
        L = next(iter(ws.models.values())).presentation
    return ws, L


def _parse_expr_str(text, L, ws=None, names=None):
    from .parser import Parser
    p = Parser(text)
    expr = p.parse_expr()
    errs = [d for d in p.diags if d.severity == "error"]
    if errs or not p.at("EOF"):
        raise ElaborationError("cannot parse expression %r" % text)
    return eval_expr(expr, L, names=names or {})


def pretty_element(L, e):
    """Canonical bracket-expression string for a Lie element."""
    if e.is_zero():
        return "0"
    deg = e.degree()
    coords = L.coords(e, deg)
    basis = L.basis(deg)
    bits = []
    for i in sorted(coords.entries):
        c = coords.entries[i]
        label = basis[i].label or ("e%d_%d" % (deg, i))
        if c == 1:
            bits.append(label)
        else:
            cs = "%d/%d" % (c.numerator, c.denominator) if c.denominator != 1 \
                else "%d" % c.numerator
            bits.append("%s * %s" % (cs, label))
    return " + ".join(bits)


def _cap_of(L):
    return L.trunc.max_bracket_length


def run_task(task: Task) -> Report:
    t0 = time.time()
    set_resource_limit(_resource_limit())
    try:
        report = _dispatch(task)
    except ResourceLimitError as exc:
        report = Report(command=task.echo(), status="resource-limit",
                        notes=["resource limit exceeded: %s" % exc])
    except CapExceededError as exc:
        report = Report(command=task.echo(), status="resource-limit",
                        notes=["polynomial cap exceeded: %s" % exc])
    except (ElaborationError, KeyError, ValueError) as exc:
        report = Report(command=task.echo(), status="diagnostics",
                        diagnostics=[Diagnostic(0, 0, "error", str(exc))])
    finally:
        set_resource_limit(None)
    report.timing = time.time() - t0
    return report


def _dispatch(task: Task) -> Report:
    fn = _COMMANDS.get(task.command)
    if fn is None:
        raise ValueError("unknown command %r" % task.command)
    return fn(task)


# -- commands ------------------------------------------------------------------

def cmd_check(task: Task) -> Report:
    report = Report(command=task.echo())
    if task.file_text is None and task.model_ref is None:
        raise ValueError("check needs a file or a model reference")
    if task.file_text is not None:
        ws, _ = _load(task)
        report.diagnostics = list(ws.diags)
        report.tables["models"] = {name: "valid" for name in sorted(ws.models)}
        report.tables["morphisms"] = {n: "valid" for n in sorted(ws.morphisms)}
        report.tables["derivations"] = {n: "declared" for n in sorted(ws.derivations)}
        if any(d.severity == "error" for d in ws.diags):
            report.status = "diagnostics"
        else:
            report.notes.append("PASS")
    else:
        _, L = _load(task)
        report.caps["truncation"] = _cap_of(L)
        report.tables["model"] = {L.name or task.model_ref: "valid"}
        report.notes.append("PASS")
    return report


def _range_or(task, default):
    return task.degree_range or default


def cmd_homology(task: Task) -> Report:
    if task.degree_range is None:
        raise ValueError("homology needs an explicit --range a..b")
    lo, hi = task.degree_range
    report = Report(command=task.echo())

    def dims_at(trunc_override):
        _, L = _load(task, trunc_override)
        C = L.complex(range(lo, hi + 1)).validate()
        out = {}
        reps = {}
        for n in range(lo, hi + 1):
            h = homology_at(C, n)
            out[n] = h.dimension
            reps[n] = [" + ".join("%s*%s" % (c, C.basis[n][i])
                                  for i, c in sorted(z.entries.items()))
                       for z in h.cycle_reps]
        return L, out, reps

    L, dims, reps = dims_at(None)
    report.caps["truncation"] = _cap_of(L)
    report.tables["homology"] = {("H_%d" % n): d for n, d in dims.items()}
    report.tables["representatives"] = {("H_%d" % n): reps[n] for n in reps if reps[n]}
    if task.check_stability:
        _, dims2, _ = dims_at(_cap_of(L) + 1)
        report.stability = "green" if dims == dims2 else "red"
    return report


def cmd_bch(task: Task) -> Report:
    ws, L = _load(task)
    x = _parse_expr_str(task.exprs["x"], L)
    y = _parse_expr_str(task.exprs["y"], L)
    out = bch(x, y)
    report = Report(command=task.echo())
    report.caps["truncation"] = _cap_of(L)
    report.tables["bch"] = {"result": pretty_element(L, out)}
    return report


def cmd_gauge(task: Task) -> Report:
    ws, L = _load(task)
    x = _parse_expr_str(task.exprs["x"], L)
    a = _parse_expr_str(task.exprs["a"], L)
    res = gauge_act(x, MCElement(L, a))
    report = Report(command=task.echo())
    report.caps["truncation"] = _cap_of(L)
    report.tables["gauge"] = {"result": pretty_element(L, res.value),
                              "mc_check": "pass"}
    return report


def cmd_gauge_equiv(task: Task) -> Report:
    ws, L = _load(task)
    a = MCElement(L, _parse_expr_str(task.exprs["a"], L))
    b = MCElement(L, _parse_expr_str(task.exprs["b"], L))
    res = gauge_equivalent(a, b)
    report = Report(command=task.echo())
    report.caps["truncation"] = _cap_of(L)
    if res.equivalent:
        report.tables["gauge_equiv"] = {
            "equivalent": True, "witness": pretty_element(L, res.witness),
            "level": res.level}
    else:
        report.tables["gauge_equiv"] = {
            "equivalent": False, "level": res.level,
            "obstruction_stage": res.failed_stage}
    return report


def cmd_exp(task: Task) -> Report:
    ws, L = _load(task)
    name = task.names.get("derivation")
    if ws is None or name not in ws.derivations:
        raise KeyError("exp needs a file-declared derivation (--derivation)")
    theta = ws.derivations[name]
    phi = exp_derivation_values(theta.source, theta.values)
    report = Report(command=task.echo())
    report.caps["truncation"] = _cap_of(theta.source)
    report.tables["exp"] = {g.name: pretty_element(theta.source, img)
                            for g, img in phi.images.items()}
    return report


def cmd_log(task: Task) -> Report:
    ws, L = _load(task)
    name = task.names.get("morphism")
    if ws is None or name not in ws.morphisms:
        raise KeyError("log needs a file-declared morphism (--morphism)")
    phi = ws.morphisms[name]
    values = log_morphism(phi)
    report = Report(command=task.echo())
    report.caps["truncation"] = _cap_of(phi.source)
    report.tables["log"] = {g.name: pretty_element(phi.source, v)
                            for g, v in values.items() if not v.is_zero()}
    return report


def cmd_h0(task: Task) -> Report:
    report = Report(command=task.echo())

    def group_at(trunc_override):
        _, L = _load(task, trunc_override)
        return L, h0_group(L)

    L, G = group_at(None)
    report.caps["truncation"] = _cap_of(L)
    report.tables["h0"] = {
        "dimension": G.dimension,
        "abelian": G.abelian,
        "nilpotency_class": G.nilpotency_class,
        "malcev_stage": G.truncation_level,
    }
    consts = {}
    for (i, j), vec in sorted(G.structure.items()):
        val = " + ".join("%s*h%d" % (c, k) for k, c in sorted(vec.entries.items()))
        consts["h%d*h%d" % (i, j)] = val or "0"
    report.tables["structure_constants"] = consts
    report.tables["representatives"] = {
        "h%d" % i: pretty_element(L, r) for i, r in enumerate(G.reps)}
    if task.check_stability:
        _, G2 = group_at(_cap_of(L) + 1)
        report.stability = "green" if (G.dimension == G2.dimension
                                       and G.abelian == G2.abelian) else "red"
        report.notes.append("structure constants are the stage-%d Malcev "
                            "approximation" % G.truncation_level)
    return report


def _resolve_morphism(task, ws, L):
    name = task.names.get("morphism", "id")
    if name == "id":
        return DGLMorphism.identity(L)
    if name == "zero":
        return DGLMorphism.zero_morphism(L, L)
    if ws is None or name not in ws.morphisms:
        raise KeyError("unknown morphism %r" % name)
    return ws.morphisms[name]


def cmd_pi_map(task: Task) -> Report:
    if task.degree_range is None:
        raise ValueError("pi-map needs an explicit --range a..b")
    lo, hi = task.degree_range
    lo = max(lo, 1)
    report = Report(command=task.echo())

    def run(trunc_override):
        ws, L = _load(task, trunc_override)
        phi = _resolve_morphism(task, ws, L)
        return L, mapping_space_pi(phi, range(lo, hi + 1))

    L, rep = run(None)
    report.caps["truncation"] = _cap_of(L)
    report.tables["pi_pointed"] = {("pi_%d" % n): d for n, d in rep.pointed.items()}
    report.tables["pi_free"] = {("pi_%d" % n): d for n, d in rep.free.items()}
    report.tables["fiber_components_h0"] = {"dimension": rep.fiber_components_h0}
    report.notes.append("LES exactness verified at degrees %s"
                        % (rep.les.degrees,))
    if task.check_stability:
        _, rep2 = run(_cap_of(L) + 1)
        report.stability = ("green" if (rep.pointed, rep.free) ==
                            (rep2.pointed, rep2.free) else "red")
    return report


def _resolve_gspec(task, ws, L) -> GSpec:
    spec = task.gspec or "identity"
    if spec == "identity":
        return GSpec("identity", L)
    if spec.startswith("stabilizer:"):
        name = spec.split(":", 1)[1]
        if ws is None:
            raise KeyError("stabilizer spec needs a model file with "
                           "filtration %r" % name)
        for m in ws.models.values():
            if m.presentation is L and name in m.filtrations:
                return GSpec("stabilizer", L, filtration=m.filtrations[name])
        raise KeyError("unknown filtration %r" % name)
    if spec.startswith("span:"):
        names = [n for n in spec.split(":", 1)[1].split(",") if n]
        if ws is None:
            raise KeyError("span spec needs a model file with derivations")
        ders = []
        for n in names:
            if n not in ws.derivations:
                raise KeyError("unknown derivation %r" % n)
            ders.append(ws.derivations[n])
        return GSpec("span", L, span=ders)
    raise ValueError("bad --gspec %r" % spec)


def _classifying(task: Task, mode) -> Report:
    if task.degree_range is None:
        raise ValueError("%s needs an explicit --range a..b" % task.command)
    lo, hi = task.degree_range
    report = Report(command=task.echo())

    def run(trunc_override):
        ws, L = _load(task, trunc_override)
        spec = _resolve_gspec(task, ws, L)
        return L, classifying_invariants(L, spec, mode, range(max(lo, 1), hi + 1))

    L, rep = run(None)
    report.caps["truncation"] = _cap_of(L)
    if mode == "FREE":
        report.tables["pi_baut"] = {("pi_%d" % (n + 1)): d
                                    for n, d in sorted(rep.pi_base.items())}
        report.tables["group"] = {
            "dimension": rep.h0_quotient.dimension,
            "ad_image_rank": rep.h0_quotient.ad_image_rank,
            "abelian": rep.h0_quotient.abelian,
        }
    else:
        report.tables["pi_group"] = {"dimension": rep.h0_quotient.dimension,
                                     "abelian": rep.h0_quotient.abelian}
        report.tables["total_homology"] = {("H_%d" % n): d
                                           for n, d in sorted(rep.total_homology.items())}
    report.tables["invariants"] = {
        "der0_dimension": rep.der0_dimension,
        "homotopy_nilpotency": rep.nilpotency,
        "saturation": rep.saturation_flag,
    }
    if task.check_stability:
        _, rep2 = run(_cap_of(L) + 1)
        same = (rep.pi_base == rep2.pi_base
                and rep.h0_quotient.dimension == rep2.h0_quotient.dimension
                and rep.total_homology == rep2.total_homology)
        report.stability = "green" if same else "red"
    return report


def cmd_baut(task: Task) -> Report:
    return _classifying(task, "FREE")


def cmd_bautstar(task: Task) -> Report:
    return _classifying(task, "POINTED")


def cmd_witness(task: Task) -> Report:
    ws, L = _load(task)
    if ws is None:
        raise ValueError("witness checking needs a model file")
    hname = task.names.get("homotopy")
    if hname is None:
        raise ValueError("witness needs --homotopy NAME")
    w = ws.witness(hname, task.poly_cap)
    phi = ws.morphisms.get(task.names.get("from", ""))
    psi = ws.morphisms.get(task.names.get("to", ""))
    if phi is None or psi is None:
        raise KeyError("witness needs --from and --to morphism names")
    verdict = check_homotopy(w, phi, psi)
    report = Report(command=task.echo())
    report.caps.update(verdict.caps)
    report.tables["witness"] = {"accepted": verdict.ok,
                                "cap_stable": bool(verdict.stable)}
    if verdict.certificate:
        report.tables["certificate"] = {k: str(v)
                                        for k, v in verdict.certificate.items()}
    return report


def cmd_gamma(task: Task) -> Report:
    ws, L = _load(task)
    phi = _resolve_morphism(task, ws, L)
    rep = gamma_check(phi, task.word_cap)
    report = Report(command=task.echo())
    report.caps.update(rep.caps)
    report.tables["gamma"] = {"verified": rep.ok,
                              "basis_checked": rep.basis_checked,
                              "pairs_checked": rep.pairs_checked}
    if rep.failures:
        report.tables["failures"] = [str(f) for f in rep.failures]
        report.status = "diagnostics"
    return report


_COMMANDS = {
    "check": cmd_check,
    "homology": cmd_homology,
    "bch": cmd_bch,
    "gauge": cmd_gauge,
    "gauge-equiv": cmd_gauge_equiv,
    "exp": cmd_exp,
    "log": cmd_log,
    "h0": cmd_h0,
    "pi-map": cmd_pi_map,
    "baut": cmd_baut,
    "bautstar": cmd_bautstar,
    "witness": cmd_witness,
    "gamma": cmd_gamma,
}
