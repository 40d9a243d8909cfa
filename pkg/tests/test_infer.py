from eqalign.analyze import analyze_source
from eqalign.infer import AlignOptions, ProofGraph, retract, run_inference
from eqalign.ir import PHI_OP, Instruction
from eqalign.lemmas import (TAG_BACK_DEPENDENCY, TAG_DATA,
                            TAG_LOOP_ASSUMPTION, TRUE, BaseCases, Lemma,
                            Proposition, generate_lemmas, index_lemmas)

from conftest import LOOP_FOR_SRC, LOOP_WHILE_SRC


def run_pair(fa, fb, options=None, order="fifo"):
    options = options or AlignOptions()
    lemmas, base = generate_lemmas(fa, fb, options)
    graph = run_inference(index_lemmas(lemmas), base, options, worklist_order=order)
    return graph, lemmas


def pair_names(graph, fa, fb):
    out = set()
    for prop in graph.proven_instruction_pairs():
        out.add((prop.left.id, prop.right.id))
    return out


def describe(fn, instr_id):
    return repr(fn.instructions[instr_id])


def test_loop_pair_proves_the_full_inductive_set(loop_pair):
    fa, fb = loop_pair
    graph, _ = run_pair(fa, fb)
    proven = {(repr(p.left), repr(p.right)) for p in graph.proven_props()}
    # Base cases: positional parameters and shared constants.
    assert ("str", "ptr") in proven
    assert ("len", "size") in proven
    assert ("0", "0") in proven
    # The phi pair, both adds, the loop branches, and the calls.
    by_op = {}
    for prop in graph.proven_instruction_pairs():
        by_op.setdefault(prop.left.op, []).append(prop)
    assert len(by_op[PHI_OP]) == 1
    assert len(by_op["+"]) == 2
    assert len(by_op["branch"]) == 1
    assert len(by_op["call"]) == 2
    # Every instruction of both sides participates.
    assert len(graph.proven_instruction_pairs()) == len(fa.instructions)


def test_assumption_edge_replaced_by_proven_back_dependency(loop_pair):
    fa, fb = loop_pair
    graph, _ = run_pair(fa, fb)
    phi_f = next(i for i in fa.instructions if i.op == PHI_OP)
    phi_g = next(i for i in fb.instructions if i.op == PHI_OP)
    tags = graph.position_tags(Proposition(phi_f, phi_g))
    # After revocation, position 1 is held by the back-dependency lemma.
    assert tags[1] == {TAG_BACK_DEPENDENCY}
    assert not graph.assumption_edges


def test_failed_induction_retracts_loop_body(write_retry_pair):
    fa, fb = write_retry_pair
    graph, _ = run_pair(fa, fb, AlignOptions(partial_loop=False))
    # The stride add differs, the phi induction fails, and everything the
    # assumed phi pair supported is revoked; only base cases survive.
    assert graph.proven_instruction_pairs() == []
    assert any(p.is_instruction_pair() for p in graph.retracted)
    # Parameter base cases are untouched by retraction.
    for pa, pb in zip(fa.params, fb.params):
        assert graph.is_proven(Proposition(pa, pb))


def test_partial_mode_keeps_loop_prefix(write_retry_pair):
    fa, fb = write_retry_pair
    graph, _ = run_pair(fa, fb, AlignOptions(partial_loop=True))
    ops = sorted(p.left.op for p in graph.proven_instruction_pairs())
    assert "call" in ops and "<" in ops and "<=" in ops
    stride_f = next(i for i in fa.instructions
                    if i.op == "+" and "byteswritten" in i.assigned_names)
    stride_g = next(i for i in fb.instructions
                    if i.op == "+" and "i" in i.assigned_names)
    assert not graph.is_proven(Proposition(stride_f, stride_g))


def test_disjoint_operators_prove_only_base_cases():
    fa = analyze_source("int f(int x) { return x * 3; }")
    fb = analyze_source("int g(int x) { return probe(x); }")
    graph, _ = run_pair(fa, fb)
    assert graph.proven_instruction_pairs() == []
    assert graph.is_proven(Proposition(fa.params[0], fb.params[0]))


####################
# Retraction unit tests on hand-built graphs
####################


class _FakeValue(Instruction):
    def __init__(self, tag):
        super().__init__("fake", [])
        self.id = tag


def _prop(a, b):
    return Proposition(_FakeValue(a), _FakeValue(b))


def test_retract_cascades_down_a_chain():
    # A => B => C, each single-position; retracting A removes all three.
    a, b, c = _prop(1, 1), _prop(2, 2), _prop(3, 3)
    graph = ProofGraph(BaseCases([a]))
    graph.add_edge(Lemma(a, b, 0, 1, TAG_DATA))
    graph.add_edge(Lemma(b, c, 0, 1, TAG_DATA))
    assert graph.is_proven(b) and graph.is_proven(c)
    graph.nodes[a].ground = False
    graph.nodes[a].proven = False
    retract(graph, a)
    assert not graph.is_proven(b)
    assert not graph.is_proven(c)
    assert b in graph.retracted and c in graph.retracted


def test_diamond_with_alternative_support_survives():
    # Hand-built four-node graph: C is concluded from both A and D at its
    # two positions, but position 0 is double-covered by a back-dependency
    # and an assumption. Removing the assumption edge keeps C fully
    # supported; retracting A afterward drops it.
    a, d, c = _prop(1, 1), _prop(2, 2), _prop(3, 3)
    graph = ProofGraph(BaseCases([a, d]))
    assumption = Lemma(TRUE, c, 0, 2, TAG_LOOP_ASSUMPTION)
    graph.add_edge(assumption)
    graph.add_edge(Lemma(a, c, 0, 2, TAG_BACK_DEPENDENCY))
    graph.add_edge(Lemma(d, c, 1, 2, TAG_DATA))
    assert graph.is_proven(c)
    # Recompute support after dropping the assumption edge, as revocation does.
    node = graph.nodes[c]
    node.support[0] = [e for e in node.support[0] if e.tag != TAG_LOOP_ASSUMPTION]
    assert node.fully_supported(), "back-dependency edge still covers position 0"
    # Now retract A: position 0 loses its only remaining edge.
    graph.nodes[a].ground = False
    graph.nodes[a].proven = False
    retract(graph, a)
    assert not graph.is_proven(c)


def test_retraction_never_touches_ground_truth(write_retry_pair):
    fa, fb = write_retry_pair
    graph, _ = run_pair(fa, fb)
    for prop, node in graph.nodes.items():
        if node.ground:
            assert node.proven and not node.retracted


####################
# Whole-pair properties
####################


def test_fifo_and_lifo_orders_prove_identical_sets(loop_pair, write_retry_pair):
    for fa, fb in (loop_pair, write_retry_pair):
        for options in (AlignOptions(), AlignOptions(partial_loop=True)):
            fifo, _ = run_pair(fa, fb, options, order="fifo")
            lifo, _ = run_pair(fa, fb, options, order="lifo")
            assert pair_names(fifo, fa, fb) == pair_names(lifo, fa, fb)


def test_firings_bounded_by_lemma_count(loop_pair):
    fa, fb = loop_pair
    graph, lemmas = run_pair(fa, fb)
    applied = sum(len(bucket) for node in graph.nodes.values()
                  for bucket in node.support)
    assert applied <= len(lemmas)


def test_self_alignment_proves_identity_pairing():
    for source in (LOOP_FOR_SRC, LOOP_WHILE_SRC):
        fn = analyze_source(source)
        graph, _ = run_pair(fn, fn)
        identity = {(i.id, i.id) for i in fn.instructions}
        assert identity <= pair_names(graph, fn, fn)


def test_alpha_renaming_never_changes_the_proven_set():
    base = """
    int f(int first, int second) {
      int total = 0;
      while (first > 0) { total += second; first--; }
      return total;
    }
    """
    renamed = base.replace("first", "a").replace("second", "b").replace("total", "acc")
    fa = analyze_source(base)
    fb1 = analyze_source(base)
    fb2 = analyze_source(renamed)
    graph1, _ = run_pair(fa, fb1)
    graph2, _ = run_pair(fa, fb2)
    assert pair_names(graph1, fa, fb1) == pair_names(graph2, fa, fb2)


def test_proof_graph_json_shape(loop_pair):
    fa, fb = loop_pair
    graph, _ = run_pair(fa, fb)
    dump = graph.to_json()
    assert set(dump) == {"nodes", "edges", "retracted"}
    assert all({"prop", "n", "covered", "proven", "ground"} <= set(n) for n in dump["nodes"])
    assert all({"condition", "conclusion", "position", "tag"} <= set(e) for e in dump["edges"])
