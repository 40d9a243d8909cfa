import pytest

from eqalign.align import (align_analyzed, align_functions, audit_alignment,
                           name_accuracy, result_to_json, result_to_text,
                           verdict)
from eqalign.analyze import analyze_source
from eqalign.infer import AlignOptions
from eqalign.ir import PHI_OP

from conftest import (LIST_MAX_PRED_SRC, LIST_MAX_REF_SRC, LOOP_FOR_SRC,
                      WRITE_RETRY_PREDICTION_SRC, WRITE_RETRY_SRC)

CONTROL_OPS = {PHI_OP, "branch", "return"}


@pytest.fixture(scope="module")
def retry_partial():
    return align_functions(WRITE_RETRY_SRC, WRITE_RETRY_PREDICTION_SRC,
                           options=AlignOptions(partial_loop=True))


def test_partial_loop_alignment_has_exactly_the_five_loop_body_pairs(retry_partial):
    result = retry_partial
    ops = sorted((a.op, b.op) for a, b in result.alignment.pairs
                 if a.op not in CONTROL_OPS)
    assert ops == [("+", "+"), ("-", "-"), ("<", "<"), ("<=", "<="),
                   ("call", "call")]
    aligned_add = next(a for a, b in result.alignment.pairs if a.op == "+")
    assert "response" in [repr(v) for v in aligned_add.operands]


def test_retry_stride_adds_stay_unaligned(retry_partial):
    result = retry_partial
    stride_f = next(i for i in result.fa.instructions
                    if i.op == "+" and "byteswritten" in i.assigned_names)
    stride_g = next(i for i in result.fb.instructions
                    if i.op == "+" and "i" in i.assigned_names)
    assert stride_f in result.verdict.f_unaligned
    assert stride_g in result.verdict.g_unaligned
    assert not result.alignment.contains(stride_f, stride_g)


def test_retry_variable_map_and_accuracy(retry_partial):
    assert sorted(retry_partial.variable_map) == [
        ("fd", "fd"),
        ("len", "len"),
        ("response", "buf"),
        ("retval", "i"),
    ]
    # fd and len match exactly; buf and i do not: two of four.
    assert retry_partial.verdict.name_accuracy == 0.5


def test_full_mode_write_retry_is_not_perfectly_aligned():
    result = align_functions(WRITE_RETRY_SRC, WRITE_RETRY_PREDICTION_SRC)
    assert result.verdict.perfectly_aligned is False


def test_loop_pair_is_perfectly_aligned():
    result = align_functions(LOOP_FOR_SRC, LOOP_FOR_SRC.replace("f(", "g(", 1))
    assert result.verdict.perfectly_aligned is True
    assert not result.verdict.f_unaligned and not result.verdict.g_unaligned


def test_empty_functions_align_vacuously():
    result = align_functions("void f() {}", "void g() {}")
    assert result.verdict.perfectly_aligned is True


def test_disjoint_functions_align_nothing():
    result = align_functions("int f(int x) { return x << 1; }",
                             "void g(int x) { probe(x, x); }")
    assert result.alignment.pairs == []
    assert result.verdict.perfectly_aligned is False


def test_self_alignment_is_identity_relation():
    fn = analyze_source(WRITE_RETRY_SRC)
    result = align_analyzed(fn, fn)
    assert result.verdict.perfectly_aligned
    for instr in fn.instructions:
        assert result.alignment.contains(instr, instr)
    vmap = dict(result.variable_map)
    assert all(left == right for left, right in result.variable_map)


def test_list_walk_pair_aligns_memory_management_but_not_comparison():
    result = align_functions(LIST_MAX_PRED_SRC, LIST_MAX_REF_SRC,
                             options=AlignOptions(partial_loop=True))
    calls = {(a.payload, b.payload) for a, b in result.alignment.pairs
             if a.op == "call"}
    assert ("gettext_to_wchar", "gettext_to_wchar") in calls
    assert ("free", "free") in calls
    assert ("match_node", "match_node") in calls
    assert not any(a.op == ">" for a, b in result.alignment.pairs)
    assert ("walk", "node") in result.variable_map


def test_variable_map_includes_positional_parameters_even_unaligned_bodies():
    result = align_functions("int f(int alpha) { return alpha * 2; }",
                             "int g(int beta) { return beta + 2; }")
    assert ("alpha", "beta") in result.variable_map


def test_name_accuracy_edge_cases():
    assert name_accuracy([]) is None
    assert name_accuracy([("a", "a"), ("b", "b")]) == 1.0
    assert name_accuracy([("a", "x"), ("b", "y")]) == 0.0
    assert name_accuracy([("a", "a"), ("b", "y")]) == 0.5


def test_conflicting_name_pairs_are_all_kept():
    # x pairs with both a and b through two aligned instructions.
    f = "int f(int p, int q) { int x = p + 1; int y = q + 2; return use(x, y); }"
    g = "int g(int p, int q) { int a = p + 1; int b = q + 2; return use(a, b); }"
    result = align_functions(f, g)
    assert ("x", "a") in result.variable_map
    assert ("y", "b") in result.variable_map


def test_coverage_bookkeeping(retry_partial):
    result = retry_partial
    aligned_f = {a for a, _ in result.alignment.pairs}
    assert len(result.verdict.f_unaligned) + len(aligned_f) == len(result.fa.instructions)
    aligned_g = {b for _, b in result.alignment.pairs}
    assert len(result.verdict.g_unaligned) + len(aligned_g) == len(result.fb.instructions)


def test_variable_map_is_subset_of_source_names(retry_partial):
    f_names = {"fd", "response", "len", "retval", "byteswritten"}
    g_names = {"fd", "buf", "len", "i"}
    for left, right in retry_partial.variable_map:
        assert left in f_names and right in g_names


def test_adding_pairs_never_unaligns(retry_partial):
    # Verdict monotonicity: recomputing the verdict over a superset of the
    # pairs can only shrink the unaligned lists.
    from eqalign.align import Alignment
    result = retry_partial
    extra = result.alignment.pairs + [
        (result.verdict.f_unaligned[0], result.verdict.g_unaligned[0])
    ]
    bigger = Alignment(extra, result.alignment.value_pairs, result.alignment.options)
    v2 = verdict(bigger, result.fa, result.fb)
    assert len(v2.f_unaligned) <= len(result.verdict.f_unaligned)
    assert len(v2.g_unaligned) <= len(result.verdict.g_unaligned)


def test_isomorphism_audit_passes_on_goldens(retry_partial):
    assert audit_alignment(retry_partial) == []
    full = align_functions(WRITE_RETRY_SRC, WRITE_RETRY_PREDICTION_SRC)
    assert audit_alignment(full) == []
    loops = align_functions(LOOP_FOR_SRC, LOOP_FOR_SRC.replace("f(", "g(", 1))
    assert audit_alignment(loops) == []


def test_json_report_schema(retry_partial):
    report = result_to_json(retry_partial)
    assert set(report) == {"pairs", "unaligned_f", "unaligned_g",
                           "variable_map", "verdict", "options"}
    for pair in report["pairs"]:
        assert {"id", "op"} <= set(pair["f"])
        assert {"id", "op"} <= set(pair["g"])
    assert report["verdict"]["perfectly_aligned"] is False
    assert report["verdict"]["name_accuracy"] == 0.5
    assert report["options"] == {"partial_loop": True, "use_control_deps": True}


def test_text_report_mentions_verdict_and_map(retry_partial):
    text = result_to_text(retry_partial)
    assert "perfectly aligned: False" in text
    assert "response <-> buf" in text


DECOMPILED_RETRY_SRC = """
signed long long
write_response(int a1, long long a2, int a3) {
  int v4, v5, i;
  v4 = a3;
  for (i = 0; i < v4; i += v5) {
    v5 = write(a1, (const void *)(a2 + i), v4 - i);
    if (v5 <= 0)
      return 0LL;
  }
  return 1LL;
}
"""


def test_original_aligns_perfectly_with_machine_decompiled_form():
    # A deterministic decompiler renames everything, inserts a copy, and
    # wraps arguments in casts, but preserves the algorithm: the pair must
    # align perfectly, and the copy's name lands in the parameter map.
    result = align_functions(WRITE_RETRY_SRC, DECOMPILED_RETRY_SRC)
    assert result.verdict.perfectly_aligned
    assert audit_alignment(result) == []
    assert ("len", "a3") in result.variable_map
    assert ("len", "v4") in result.variable_map
    assert ("retval", "v5") in result.variable_map
    assert ("byteswritten", "i") in result.variable_map
