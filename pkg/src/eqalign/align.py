"""Assemble the final equivalence alignment and derive evaluation artifacts:
the perfectly-aligned verdict, the variable-name map, and exact-match name
accuracy.

An alignment is a relation over the two instruction sets, not a function:
one instruction may pair with several. The verdict counts *all* instructions
of both functions, branches and phis included; a pair of functions is
perfectly aligned only when every instruction on each side participates in
at least one proven pair.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .analyze import AnalyzedFn, analyze_source
from .infer import AlignOptions, ProofGraph, run_inference
from .ir import (PHI_OP, Constant, GlobalVar, Instruction, Parameter,
                 Uninit)
from .lemmas import (TAG_LOOP_ASSUMPTION, Proposition, generate_lemmas,
                     index_lemmas, operators_compatible)


class Alignment:
    """The proven instruction pairs of one run, plus coverage maps."""

    def __init__(self, pairs: List[Tuple[Instruction, Instruction]],
                 value_pairs: List[Proposition], options: AlignOptions):
        self.pairs = pairs
        self.pair_set = {(id(a), id(b)) for a, b in pairs}
        # Base-case value pairs (parameters, constants, globals) are carried
        # separately; they are ground truth, not alignment results.
        self.value_pairs = value_pairs
        self.options = options
        self.aligned_f: Dict[Instruction, List[Instruction]] = {}
        self.aligned_g: Dict[Instruction, List[Instruction]] = {}
        for a, b in pairs:
            self.aligned_f.setdefault(a, []).append(b)
            self.aligned_g.setdefault(b, []).append(a)

    def contains(self, a: Instruction, b: Instruction) -> bool:
        return (id(a), id(b)) in self.pair_set

    def __len__(self):
        return len(self.pairs)

    def __repr__(self):
        return f"Alignment({len(self.pairs)} pairs)"


@dataclass
class Verdict:
    perfectly_aligned: bool
    f_unaligned: List[Instruction]
    g_unaligned: List[Instruction]
    name_accuracy: Optional[float] = None


VariableMap = List[Tuple[str, str]]


def extract_alignment(graph: ProofGraph, fa: AnalyzedFn, fb: AnalyzedFn,
                      options: Optional[AlignOptions] = None) -> Alignment:
    """Collect the instruction-bound proven propositions into an Alignment."""
    if options is None:
        options = AlignOptions()
    pairs: List[Tuple[Instruction, Instruction]] = []
    value_pairs: List[Proposition] = []
    for prop in graph.proven_props():
        if prop.is_instruction_pair():
            pairs.append((prop.left, prop.right))
        else:
            value_pairs.append(prop)
    pairs.sort(key=lambda pair: (pair[0].id, pair[1].id))
    return Alignment(pairs, value_pairs, options)


def verdict(alignment: Alignment, fa: AnalyzedFn, fb: AnalyzedFn) -> Verdict:
    f_unaligned = [i for i in fa.instructions if i not in alignment.aligned_f]
    g_unaligned = [i for i in fb.instructions if i not in alignment.aligned_g]
    result = Verdict(
        perfectly_aligned=not f_unaligned and not g_unaligned,
        f_unaligned=f_unaligned,
        g_unaligned=g_unaligned,
    )
    vmap = map_variables(alignment, fa, fb)
    result.name_accuracy = name_accuracy(vmap)
    return result


def map_variables(alignment: Alignment, fa: AnalyzedFn, fb: AnalyzedFn) -> VariableMap:
    """Derive the variable-name correspondence from the alignment.

    Parameters pair positionally. Beyond that, whenever both instructions of
    an aligned pair were assigned to source variables, those names pair up.
    Phi instructions never assign in the source, so they contribute nothing.
    Conflicting pairs are all kept; the map is a deduplicated set.
    """
    seen: Set[Tuple[str, str]] = set()
    out: List[Tuple[str, str]] = []

    def add(left: str, right: str):
        if (left, right) not in seen:
            seen.add((left, right))
            out.append((left, right))

    for pa, pb in zip(fa.params, fb.params):
        for left in pa.assigned_names:
            for right in pb.assigned_names:
                add(left, right)
    for a, b in alignment.pairs:
        if a.op == PHI_OP or b.op == PHI_OP:
            continue
        for left in a.assigned_names:
            for right in b.assigned_names:
                add(left, right)
    return out


def name_accuracy(vmap: VariableMap) -> Optional[float]:
    """Exact-match accuracy over the deduplicated name pairs.

    Returns None for an empty map: there is nothing measurable.
    """
    if not vmap:
        return None
    return sum(1 for left, right in vmap if left == right) / len(vmap)


####################
#  Whole pipeline  #
####################


@dataclass
class AlignResult:
    fa: AnalyzedFn
    fb: AnalyzedFn
    graph: ProofGraph
    alignment: Alignment
    verdict: Verdict
    variable_map: VariableMap
    lemmas: list = field(default_factory=list, repr=False)


def align_analyzed(fa: AnalyzedFn, fb: AnalyzedFn,
                   options: Optional[AlignOptions] = None,
                   worklist_order: str = "fifo",
                   keep_lemmas: bool = False) -> AlignResult:
    if options is None:
        options = AlignOptions()
    lemma_list, base = generate_lemmas(fa, fb, options)
    index = index_lemmas(lemma_list)
    graph = run_inference(index, base, options, worklist_order=worklist_order)
    alignment = extract_alignment(graph, fa, fb, options)
    result_verdict = verdict(alignment, fa, fb)
    vmap = map_variables(alignment, fa, fb)
    return AlignResult(fa, fb, graph, alignment, result_verdict, vmap,
                       lemmas=lemma_list if keep_lemmas else [])


def align_functions(source_a: str, source_b: str,
                    function_a: Optional[str] = None,
                    function_b: Optional[str] = None,
                    options: Optional[AlignOptions] = None) -> AlignResult:
    """Align two functions given as C source text.

    :param source_a: text containing the first function (the prediction, in
        evaluation settings).
    :param source_b: text containing the second function (the reference).
    :param function_a: name of the function within source_a; optional when
        the text holds exactly one definition.
    :param function_b: likewise for source_b.
    :param options: loop handling and control-dependence options.
    :raises SubsetError: when either side fails to parse or analyze.
    """
    fa = analyze_source(source_a, function_a)
    fb = analyze_source(source_b, function_b)
    return align_analyzed(fa, fb, options)


####################
#  Isomorphism audit  #
####################


def audit_alignment(result: AlignResult) -> List[str]:
    """Check the aligned-subgraph invariant; returns violation descriptions.

    For every proven instruction pair: the operators must be compatible, the
    operand lists must pair up position by position with equivalent values,
    and the ordered control dependencies must pair up with identical labels.
    Positions held up only by loop assumptions (partial-loop mode) are the
    documented relaxation and are skipped.
    """
    violations: List[str] = []
    graph, fa, fb = result.graph, result.fa, result.fb
    use_ctrl = result.alignment.options.use_control_deps

    for a, b in result.alignment.pairs:
        prop = Proposition(a, b)
        tags = graph.position_tags(prop)
        if not operators_compatible(a, b):
            violations.append(f"operator mismatch: {a!r} vs {b!r}")
            continue
        if len(a.operands) != len(b.operands):
            violations.append(f"operand count mismatch: {a!r} vs {b!r}")
            continue
        data_count = max(1, len(a.operands))
        for i, (left, right) in enumerate(zip(a.operands, b.operands)):
            if tags[i] == {TAG_LOOP_ASSUMPTION}:
                continue
            if not _values_equivalent(graph, left, right):
                violations.append(
                    f"operand {i} of {a!r} / {b!r} not proven equivalent: "
                    f"{left!r} vs {right!r}")
        if use_ctrl:
            deps_a, deps_b = fa.ctrl_deps[a], fb.ctrl_deps[b]
            if len(deps_a) != len(deps_b):
                violations.append(f"control dependency count mismatch: {a!r} vs {b!r}")
                continue
            for j, ((br_a, label_a), (br_b, label_b)) in enumerate(zip(deps_a, deps_b)):
                position = data_count + j
                if label_a != label_b:
                    violations.append(
                        f"control label mismatch at {a!r} / {b!r}: {label_a} vs {label_b}")
                    continue
                if tags[position] == {TAG_LOOP_ASSUMPTION}:
                    continue
                if not graph.is_proven(Proposition(br_a, br_b)):
                    violations.append(
                        f"controlling branches of {a!r} / {b!r} not aligned")
    return violations


def _values_equivalent(graph: ProofGraph, left, right) -> bool:
    if isinstance(left, Constant) and isinstance(right, Constant):
        return type(left.value) is type(right.value) and left.value == right.value
    if isinstance(left, Parameter) and isinstance(right, Parameter):
        return left.position == right.position
    if isinstance(left, GlobalVar) and isinstance(right, GlobalVar):
        return left.name == right.name
    if isinstance(left, Uninit) and isinstance(right, Uninit):
        return True
    return graph.is_proven(Proposition(left, right))


####################
#   JSON output    #
####################


def result_to_json(result: AlignResult) -> dict:
    def instr_ref(instr: Instruction) -> dict:
        ref = {"id": instr.id, "op": instr.op}
        if instr.payload is not None:
            ref["payload"] = str(instr.payload)
        if instr.span is not None:
            ref["span"] = {"line": instr.span.line, "col": instr.span.col}
        return ref

    v = result.verdict
    return {
        "pairs": [{"f": instr_ref(a), "g": instr_ref(b)}
                  for a, b in result.alignment.pairs],
        "unaligned_f": [instr_ref(i) for i in v.f_unaligned],
        "unaligned_g": [instr_ref(i) for i in v.g_unaligned],
        "variable_map": [{"f": a, "g": b} for a, b in sorted(result.variable_map)],
        "verdict": {
            "perfectly_aligned": v.perfectly_aligned,
            "name_accuracy": v.name_accuracy,
        },
        "options": result.alignment.options.to_json(),
    }


def result_to_text(result: AlignResult) -> str:
    lines = [f"alignment of {result.fa.name} (f) and {result.fb.name} (g)"]
    for a, b in result.alignment.pairs:
        lines.append(f"  {a!r}  <->  {b!r}")
    if result.verdict.f_unaligned:
        lines.append("unaligned in f:")
        for i in result.verdict.f_unaligned:
            lines.append(f"  {i!r}")
    if result.verdict.g_unaligned:
        lines.append("unaligned in g:")
        for i in result.verdict.g_unaligned:
            lines.append(f"  {i!r}")
    lines.append("variable map:")
    for left, right in sorted(result.variable_map):
        marker = "==" if left == right else "<->"
        lines.append(f"  {left} {marker} {right}")
    v = result.verdict
    lines.append(f"perfectly aligned: {v.perfectly_aligned}")
    if v.name_accuracy is not None:
        lines.append(f"name accuracy: {v.name_accuracy:.3f}")
    return "\n".join(lines)
