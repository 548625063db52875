import os

from cdgl.freelie import Truncation
from cdgl.models import builtin_model, circle_model
from cdgl.workbench import parse_document, run_task, workspace_from_text
from cdgl.workbench.ast import print_document
from cdgl.workbench.elaborate import export_source
from cdgl.workbench.report import canonical
from cdgl.workbench.tasks import Task

DATA = os.path.join(os.path.dirname(__file__), "data")


def read(name):
    with open(os.path.join(DATA, name), encoding="utf-8") as fh:
        return fh.read()


# -- parsing --------------------------------------------------------------------

def test_parse_minimal_model():
    doc, diags = parse_document("model S { gen x : 2  d x = 0 * x }")
    assert not [d for d in diags if d.severity == "error"]
    m = doc.models()[0]
    assert m.name == "S"
    assert any(getattr(d, "name", None) == "x" for d in m.decls)


def test_parse_circle_source_elaborates_to_builtin():
    ws, _ = workspace_from_text(read("s1.cdgl"))
    assert not [d for d in ws.diags if d.severity == "error"]
    L = ws.model("S1")
    builtin = circle_model(Truncation(5))
    assert {g.name: g.degree for g in L.gens} == \
        {g.name: g.degree for g in builtin.gens}
    for g, bg in zip(L.gens, builtin.gens):
        assert L.d_on_gens[g].terms == builtin.d_on_gens[bg].terms


def test_unknown_generator_diagnostic_position():
    doc, diags = parse_document("model M {\n  gen x : 2\n  d x = [x, y]\n}")
    ws, _ = workspace_from_text("model M {\n  gen x : 2\n  d x = [x, y]\n}")
    errs = [d for d in ws.diags if d.severity == "error"]
    assert errs and "unknown generator y" in errs[0].message
    assert errs[0].line == 3


def test_error_corpus_produces_positioned_diagnostics():
    for i in range(1, 11):
        name = "errors/e%02d.cdgl" % i
        ws, _ = workspace_from_text(read(name))
        errs = [d for d in ws.diags if d.severity == "error"]
        assert errs, "expected diagnostics for %s" % name
        assert all(d.line >= 1 and d.col >= 1 for d in errs)


def test_parser_never_crashes_on_corpus():
    for i in range(1, 11):
        doc, diags = parse_document(read("errors/e%02d.cdgl" % i))
        assert doc is not None


# -- printing -------------------------------------------------------------------

CORPUS = ["s1.cdgl", "sphere2.cdgl", "wedge_homotopy.cdgl", "wedge_spheres.cdgl"]


def test_roundtrip_parse_print_parse_on_corpus():
    for name in CORPUS:
        doc, diags = parse_document(read(name))
        assert not [d for d in diags if d.severity == "error"], name
        printed = print_document(doc)
        doc2, diags2 = parse_document(printed)
        assert not [d for d in diags2 if d.severity == "error"], name
        assert print_document(doc2) == printed, name


def test_print_is_idempotent_on_builtin_exports():
    for ref, params in (("sphere", (2,)), ("sphere", (3,)), ("wedge", (1, 1)),
                        ("S1", ()), ("L1", ()), ("L0", ())):
        L = builtin_model(ref, params, Truncation(4))
        src = export_source(L)
        doc, diags = parse_document(src)
        assert not [d for d in diags if d.severity == "error"], ref
        printed = print_document(doc)
        doc2, _ = parse_document(printed)
        assert print_document(doc2) == printed


def test_builtin_export_elaborates_to_equal_presentation():
    for ref, params in (("S1", ()), ("L1", ()), ("wedge", (2, 2))):
        L = builtin_model(ref, params, Truncation(4))
        ws, _ = workspace_from_text(export_source(L, name="M"))
        assert not [d for d in ws.diags if d.severity == "error"]
        M = ws.model("M")
        assert {g.name: g.degree for g in M.gens} == \
            {g.name: g.degree for g in L.gens}
        for g, bg in zip(M.gens, L.gens):
            assert M.d_on_gens[g].terms == L.d_on_gens[bg].terms


# -- tasks ------------------------------------------------------------------------

def test_check_task_pass():
    rep = run_task(Task("check", file_text=read("s1.cdgl")))
    assert rep.exit_code() == 0
    assert "PASS" in rep.notes


def test_check_task_diagnostics_exit_code():
    rep = run_task(Task("check", file_text=read("errors/e01.cdgl")))
    assert rep.exit_code() == 1
    assert rep.status == "diagnostics"


def test_check_builtin_interval():
    rep = run_task(Task("check", model_ref="L1", trunc=8,
                        check_stability=False))
    assert rep.exit_code() == 0


def test_homology_requires_range():
    rep = run_task(Task("homology", model_ref="sphere(3)"))
    assert rep.exit_code() == 1


def test_homology_sphere_report():
    rep = run_task(Task("homology", model_ref="sphere(3)",
                        degree_range=(0, 4)))
    assert rep.exit_code() == 0
    assert rep.tables["homology"]["H_2"] == 1
    assert rep.stability == "green"


def test_bch_task():
    rep = run_task(Task("bch", model_ref="wedge(1,1)", trunc=2,
                        exprs={"x": "x", "y": "y"}, check_stability=False))
    assert rep.tables["bch"]["result"] == "x + y + 1/2 * [x,y]"


def test_gauge_task_and_equiv():
    rep = run_task(Task("gauge", model_ref="L1", trunc=5,
                        exprs={"x": "x", "a": "a"}, check_stability=False))
    assert rep.tables["gauge"]["result"] == "b"
    rep2 = run_task(Task("gauge-equiv", model_ref="L1", trunc=4,
                         exprs={"a": "a", "b": "b"}, check_stability=False))
    assert rep2.tables["gauge_equiv"]["equivalent"] is True


def test_gauge_equiv_negative():
    rep = run_task(Task("gauge-equiv", model_ref="S1", trunc=4,
                        exprs={"a": "0 * b", "b": "b"}, check_stability=False))
    assert rep.tables["gauge_equiv"]["equivalent"] is False


def test_exp_log_tasks():
    text = read("wedge_spheres.cdgl")
    rep = run_task(Task("exp", file_text=text, names={"derivation": "slide"}))
    assert rep.tables["exp"]["x"] == "x + y"
    rep2 = run_task(Task("log", file_text=text, names={"morphism": "shear"}))
    assert rep2.tables["log"]["x"] == "y"


def test_h0_task_wedge():
    rep = run_task(Task("h0", model_ref="wedge(1,1)", trunc=2,
                        check_stability=False))
    assert rep.tables["h0"]["dimension"] == 3
    assert rep.tables["h0"]["nilpotency_class"] == 2


def test_pi_map_task():
    rep = run_task(Task("pi-map", model_ref="sphere(3)", trunc=3,
                        degree_range=(1, 5), names={"morphism": "id"}))
    assert rep.tables["pi_free"]["pi_3"] == 1
    assert rep.stability == "green"


def test_baut_task_sphere2():
    rep = run_task(Task("baut", model_ref="sphere(2)", trunc=4,
                        degree_range=(1, 6)))
    table = rep.tables["pi_baut"]
    assert table["pi_4"] == 1
    assert all(v == 0 for k, v in table.items() if k != "pi_4")
    assert rep.stability == "green"


def test_baut_stabilizer_from_file():
    rep = run_task(Task("baut", file_text=read("wedge_spheres.cdgl"),
                        model_ref="W3", degree_range=(1, 5),
                        gspec="stabilizer:F", check_stability=False))
    assert rep.tables["group"]["dimension"] == 1
    assert rep.tables["group"]["abelian"] is True


def test_witness_task():
    text = read("wedge_homotopy.cdgl")
    rep = run_task(Task("witness", file_text=text, poly_cap=6,
                        names={"homotopy": "Psi", "from": "f", "to": "g"},
                        check_stability=False))
    assert rep.tables["witness"]["accepted"] is True


def test_reports_deterministic():
    t = Task("h0", model_ref="wedge(1,1)", trunc=2, check_stability=False)
    a = canonical(run_task(t))
    b = canonical(run_task(t))
    assert a == b


def test_resource_limit_exit_code(monkeypatch):
    monkeypatch.setenv("CDGL_RESOURCE_LIMIT", "1")
    rep = run_task(Task("homology", model_ref="wedge(1,1)", trunc=4,
                        degree_range=(0, 1), check_stability=False))
    assert rep.exit_code() == 2
    monkeypatch.delenv("CDGL_RESOURCE_LIMIT")
