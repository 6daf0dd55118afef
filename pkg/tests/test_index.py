import random

import pytest

from actreach.errors import DuplicateClass
from actreach.index import build_code_index
from actreach.smali import MethodRef, parse_smali_file

from conftest import SMALI_FIXTURES


def make_synthetic_package(rng: random.Random, max_classes: int = 50):
    """Random smali texts with random in-package invokes."""
    n_classes = rng.randint(2, max_classes)
    names = [f"Lcom/syn/C{i};" for i in range(n_classes)]
    methods = {name: [f"m{j}()V" for j in range(rng.randint(1, 4))] for name in names}
    all_refs = [(owner, sig) for owner, sigs in methods.items() for sig in sigs]

    texts = []
    for name in names:
        lines = [f".class public {name}", ".super Ljava/lang/Object;", ""]
        for sig in methods[name]:
            lines.append(f".method public {sig[:sig.index('(')]}()V")
            lines.append("    .locals 0")
            for _ in range(rng.randint(0, 6)):
                owner, callee_sig = rng.choice(all_refs)
                lines.append(f"    invoke-virtual {{p0}}, {owner}->{callee_sig}")
            if rng.random() < 0.3:
                lines.append("    invoke-static {}, Lout/of/Index;->ext()V")
            lines.append("    return-void")
            lines.append(".end method")
            lines.append("")
        texts.append("\n".join(lines) + "\n")
    return [parse_smali_file(t) for t in texts]


def brute_force_duality_holds(index) -> bool:
    """Double loop over all (caller, callee) pairs of in-index methods."""
    refs = sorted(index.method_refs())
    callee_sets = {ref: set(index.callees.get(ref, ())) for ref in refs}
    caller_sets = {ref: set(index.callers.get(ref, ())) for ref in refs}
    for a in refs:
        for b in refs:
            if (b in callee_sets[a]) != (a in caller_sets[b]):
                return False
    return True


def fixture_index():
    classes = [
        parse_smali_file((SMALI_FIXTURES / name).read_text(encoding="utf-8"))
        for name in ("ContentsListBaseActivity.smali", "IosOtgContentsListActivity.smali", "overloads.smali")
    ]
    return build_code_index(classes)


CLS = "Lcom/sec/android/easyMover/ContentsListBaseActivity;"


def test_two_node_callgraph():
    a = parse_smali_file(
        ".class public La/A;\n.super Ljava/lang/Object;\n"
        ".method public entry()V\n    invoke-virtual {p0}, Lb/B;->m()V\n    return-void\n.end method\n"
    )
    b = parse_smali_file(
        ".class public Lb/B;\n.super Ljava/lang/Object;\n"
        ".method public m()V\n    return-void\n.end method\n"
    )
    index = build_code_index([a, b])
    assert index.get_caller_methods("Lb/B;", "m()V") == [MethodRef("La/A;", "entry()V")]


def test_guard_fixture_callees_and_callers():
    index = fixture_index()
    invoked = index.get_methods_invoked(CLS, "onCreate(Landroid/os/Bundle;)V")
    assert MethodRef(CLS, "ShowNeedSdCardPopup()Z") in invoked
    assert index.get_caller_methods(CLS, "ShowNeedSdCardPopup()Z") == [
        MethodRef(CLS, "onCreate(Landroid/os/Bundle;)V")
    ]


def test_duplicate_class_rejected():
    cls = parse_smali_file(".class public La/A;\n.super Ljava/lang/Object;\n")
    with pytest.raises(DuplicateClass) as exc:
        build_code_index([cls, cls])
    assert "La/A;" in str(exc.value)


def test_class_exists_normalizes_dotted_names():
    index = fixture_index()
    assert index.check_class_exists("com.sec.android.easyMover.ContentsListBaseActivity")
    assert index.check_class_exists(CLS)
    assert not index.check_class_exists("Lcom/none/Missing;")
    assert not index.check_class_exists("com.none.Missing")


def test_methods_inside_class_source_order():
    index = fixture_index()
    sigs = index.get_methods_inside_class(CLS)
    assert sigs == ["onCreate(Landroid/os/Bundle;)V", "ShowNeedSdCardPopup()Z", "initContentsList()V"]
    assert index.get_methods_inside_class("Lcom/none/Missing;") is None


def test_overloads_listed_distinctly():
    index = fixture_index()
    sigs = index.get_methods_inside_class("Lcom/fix/Overloads;")
    assert sigs.count("f()V") == 1
    assert sigs.count("f(I)V") == 1


def test_method_body_reparses_to_equal_instructions():
    index = fixture_index()
    body = index.get_method_body(CLS, "onCreate(Landroid/os/Bundle;)V")
    assert "if-nez v0, :cond_0" in body
    wrapper = f".class public {CLS}\n.super Ljava/lang/Object;\n\n{body}\n"
    reparsed = parse_smali_file(wrapper)
    original = next(m for m in fixture_index().classes[CLS].methods if m.name == "onCreate")
    assert [i.raw_text.strip() for i in reparsed.methods[0].instructions] == [
        i.raw_text.strip() for i in original.instructions
    ]


def test_method_body_not_found():
    index = fixture_index()
    assert index.get_method_body(CLS, "onCreate()V") is None


def test_bare_name_matches_all_overloads():
    index = fixture_index()
    body = index.get_method_body("Lcom/fix/Overloads;", "f")
    assert ".method public f()V" in body
    assert ".method public f(I)V" in body


def test_methods_invoked_deduplicates_first_occurrence():
    index = fixture_index()
    invoked = index.get_methods_invoked("Lcom/fix/Overloads;", "g()V")
    assert invoked == [MethodRef("Lcom/fix/Overloads;", "f()V")]


def test_leaf_method_invokes_nothing():
    index = fixture_index()
    assert index.get_methods_invoked(CLS, "initContentsList()V") == []


def test_never_called_method_has_no_callers():
    index = fixture_index()
    assert index.get_caller_methods("Lcom/fix/Overloads;", "g()V") == []


def test_duality_on_random_packages():
    rng = random.Random(20240811)
    for _ in range(20):
        index = build_code_index(make_synthetic_package(rng, max_classes=12))
        assert brute_force_duality_holds(index)


def test_callers_equals_inverse_of_invoked():
    rng = random.Random(99)
    index = build_code_index(make_synthetic_package(rng, max_classes=15))
    for ref in index.method_refs():
        for callee in index.get_methods_invoked(ref.owner, ref.signature):
            if callee in index.method_refs():
                assert ref in index.get_caller_methods(callee.owner, callee.signature)


def test_index_build_is_order_insensitive_and_deterministic():
    rng = random.Random(5)
    classes = make_synthetic_package(rng, max_classes=10)
    shuffled = list(classes)
    random.Random(6).shuffle(shuffled)
    a = build_code_index(classes)
    b = build_code_index(shuffled)
    assert list(a.classes) == list(b.classes)
    assert a.callees == b.callees
    assert a.callers == b.callers
