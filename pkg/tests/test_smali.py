import pytest
from hypothesis import given
from hypothesis import strategies as st

from actreach.errors import ParseError
from actreach.smali import Kind, MethodRef, emit, parse_smali_file

from conftest import SMALI_FIXTURES, load_kind_annotations

LISTING = (SMALI_FIXTURES / "ContentsListBaseActivity.smali").read_text(encoding="utf-8")


def test_guard_fixture_class_header():
    cls = parse_smali_file(LISTING)
    assert cls.name == "Lcom/sec/android/easyMover/ContentsListBaseActivity;"
    assert cls.super_name == "Lcom/sec/android/easyMover/ActivityBase;"
    assert cls.source_file == "ContentsListBaseActivity.java"
    assert cls.access_flags == frozenset({"public", "abstract"})


def test_guard_fixture_oncreate_content():
    cls = parse_smali_file(LISTING)
    oncreates = [m for m in cls.methods if m.name == "onCreate"]
    assert len(oncreates) == 1
    method = oncreates[0]
    assert method.signature == "onCreate(Landroid/os/Bundle;)V"

    invokes = [i for i in method.instructions if i.kind is Kind.INVOKE]
    targets = [i.operands["method"] for i in invokes]
    assert (
        MethodRef("Lcom/sec/android/easyMover/ContentsListBaseActivity;", "ShowNeedSdCardPopup()Z")
        in targets
    )

    move_results = [i for i in method.instructions if i.kind is Kind.MOVE_RESULT]
    assert any(i.operands["register"] == "v0" for i in move_results)

    branches = [i for i in method.instructions if i.kind is Kind.BRANCH]
    assert any(i.operands == {"opcode": "if-nez", "registers": ("v0",), "label": ":cond_0"} for i in branches)


def test_empty_body_class():
    text = (SMALI_FIXTURES / "empty_class.smali").read_text(encoding="utf-8")
    cls = parse_smali_file(text)
    assert cls.name == "Lcom/fix/Empty;"
    assert cls.methods == ()


def test_kinds_match_hand_annotations(smali_fixture_paths):
    annotated = 0
    for path in smali_fixture_paths:
        table = load_kind_annotations(path)
        if not table:
            continue
        annotated += 1
        cls = parse_smali_file(path.read_text(encoding="utf-8"))
        by_line = {ins.line_no: ins for m in cls.methods for ins in m.instructions}
        for line_no, expected in table.items():
            ins = by_line.get(line_no)
            assert ins is not None, f"{path.name}:{line_no} not parsed as an instruction"
            assert ins.kind.value == expected, f"{path.name}:{line_no} {ins.kind.value} != {expected}"
    assert annotated >= 10


def test_roundtrip_all_fixtures(smali_fixture_paths):
    for path in smali_fixture_paths:
        text = path.read_text(encoding="utf-8")
        cls = parse_smali_file(text)
        assert emit(cls) == text, f"round-trip failed for {path.name}"


def test_roundtrip_preserves_raw_text(smali_fixture_paths):
    for path in smali_fixture_paths:
        text = path.read_text(encoding="utf-8")
        lines = text.split("\n")
        cls = parse_smali_file(text)
        for method in cls.methods:
            for ins in method.instructions:
                assert ins.raw_text == lines[ins.line_no - 1]


def test_unknown_lines_become_other_not_errors():
    text = (
        ".class public Lcom/fix/Odd;\n"
        ".super Ljava/lang/Object;\n"
        "\n"
        ".method public weird()V\n"
        "    .locals 1\n"
        "\n"
        "    packed-switch v0, :pswitch_data_0\n"
        "\n"
        "    sget-object v0, Lcom/fix/Odd;->X:Ljava/lang/Object;\n"
        "\n"
        "    totally made-up line !!!\n"
        "\n"
        "    return-void\n"
        ".end method\n"
    )
    cls = parse_smali_file(text)
    kinds = [ins.kind for ins in cls.methods[0].instructions if ins.raw_text.strip()]
    assert kinds == [Kind.OTHER, Kind.OTHER, Kind.OTHER, Kind.OTHER, Kind.RETURN]


def test_parse_error_on_unbalanced_method():
    with pytest.raises(ParseError) as exc:
        parse_smali_file(".class public Lcom/fix/A;\n.method public f()V\n    return-void\n")
    assert exc.value.line_no == 2


def test_parse_error_on_nested_method():
    text = ".class public Lcom/fix/A;\n.method public f()V\n.method public g()V\n.end method\n"
    with pytest.raises(ParseError) as exc:
        parse_smali_file(text)
    assert exc.value.line_no == 3


def test_parse_error_on_stray_end():
    with pytest.raises(ParseError):
        parse_smali_file(".class public Lcom/fix/A;\n.end method\n")


def test_parse_error_on_missing_class():
    with pytest.raises(ParseError):
        parse_smali_file(".method public f()V\n.end method\n")


def test_parse_error_on_malformed_class():
    with pytest.raises(ParseError) as exc:
        parse_smali_file(".class public NotADescriptor\n")
    assert exc.value.line_no == 1


def test_parse_error_on_undefined_branch_label():
    text = (
        ".class public Lcom/fix/A;\n"
        ".method public f()V\n"
        "    if-eqz v0, :nowhere\n"
        "    return-void\n"
        ".end method\n"
    )
    with pytest.raises(ParseError) as exc:
        parse_smali_file(text)
    assert exc.value.line_no == 3


def test_method_text_is_byte_faithful():
    cls = parse_smali_file(LISTING)
    method = next(m for m in cls.methods if m.name == "onCreate")
    text = method.text()
    assert text.startswith(".method protected onCreate(Landroid/os/Bundle;)V")
    assert text.endswith(".end method")
    assert "if-nez v0, :cond_0" in text
    assert text in LISTING


body_lines = st.lists(
    st.text(
        alphabet=st.characters(blacklist_categories=("Cs", "Cc"), blacklist_characters="\n"),
        max_size=60,
    ).filter(lambda s: not s.lstrip().startswith((".method", ".end method", ".class"))),
    max_size=12,
)


@given(body_lines)
def test_parser_total_over_arbitrary_body_lines(lines):
    body = "".join(f"    {line}\n" for line in lines)
    text = (
        ".class public Lcom/fix/Fuzz;\n.super Ljava/lang/Object;\n"
        ".method public f()V\n" + body + ".end method\n"
    )
    cls = parse_smali_file(text)
    assert len(cls.methods[0].instructions) == len(lines)
    for ins, line in zip(cls.methods[0].instructions, lines):
        assert ins.raw_text == f"    {line}"


def test_range_registers_expanded():
    text = (SMALI_FIXTURES / "kinds_mix.smali").read_text(encoding="utf-8")
    cls = parse_smali_file(text)
    method = next(m for m in cls.methods if m.name == "tryRange")
    invoke = next(i for i in method.instructions if i.kind is Kind.INVOKE)
    assert invoke.operands["registers"] == ("v0", "v1", "v2", "v3")
