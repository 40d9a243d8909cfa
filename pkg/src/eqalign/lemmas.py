"""Weighted implication lemmas and base-case propositions for a function pair.

For every pair of instructions with compatible operators, matching operand
counts, and matching labeled control-dependency lists, one lemma is emitted
per dependency position:

    dependency_i(p) equivalent to dependency_i(q)  =>  (p equivalent to q, 1/n)

where n is the pair's total dependency count (operands plus control
dependencies; instructions without operands contribute a single
unconditional position instead). A conclusion is proven once all n positions
have fired, so weights are realized as exact position counters rather than
floating-point sums.

Back-dependency positions additionally get an unconditional loop-assumption
lemma occupying the same position; that is how loop induction assumes the
inductive hypothesis. In partial-loop mode the conditional back-dependency
lemma is dropped and only the assumption remains (and is never revoked).
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .analyze import AnalyzedFn
from .ir import (CALL_INDIRECT_OP, PHI_OP, Constant, GlobalVar, Instruction,
                 Parameter, Uninit, Value)


class _TrueCondition:
    """Singleton condition for unconditional lemmas."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "true"


TRUE = _TrueCondition()


class Proposition:
    """A candidate equivalence between one value of each function.

    Stored canonically with the first function's value on the left. Values
    are unique objects per function, so identity comparison is exact.
    """

    __slots__ = ("left", "right", "_hash")

    def __init__(self, left: Value, right: Value):
        self.left = left
        self.right = right
        self._hash = hash((id(left), id(right)))

    def __eq__(self, other):
        return (isinstance(other, Proposition)
                and self.left is other.left and self.right is other.right)

    def __hash__(self):
        return self._hash

    def is_instruction_pair(self) -> bool:
        return isinstance(self.left, Instruction) and isinstance(self.right, Instruction)

    def __repr__(self):
        return f"{self.left!r} == {self.right!r}"


# Lemma tags.
TAG_DATA = "data"
TAG_CONTROL = "control"
TAG_ZERO_OPERAND = "zero-operand"
TAG_LOOP_ASSUMPTION = "loop-assumption"
TAG_BACK_DEPENDENCY = "back-dependency"


@dataclass
class Lemma:
    condition: Union[Proposition, _TrueCondition]
    conclusion: Proposition
    position: int
    n: int
    tag: str

    def __repr__(self):
        return f"{self.condition!r} => ({self.conclusion!r}, 1/{self.n}) [{self.tag}@{self.position}]"


@dataclass
class BaseCases:
    """Ground-truth propositions: positional parameters, same-name globals,
    equal normalized constants, and uninitialized-read pairs."""

    propositions: List[Proposition] = field(default_factory=list)

    def __iter__(self):
        return iter(self.propositions)

    def __len__(self):
        return len(self.propositions)


def operators_compatible(a: Instruction, b: Instruction) -> bool:
    """Operator equality rule: kind and payload identical, except indirect
    calls, which always pass here and are decided by their callee operand."""
    if a.op == CALL_INDIRECT_OP or b.op == CALL_INDIRECT_OP:
        return a.op == b.op
    return a.opkey() == b.opkey()


def make_base_cases(fa: AnalyzedFn, fb: AnalyzedFn) -> BaseCases:
    props: List[Proposition] = []
    for pa, pb in zip(fa.params, fb.params):
        props.append(Proposition(pa, pb))
    shared_globals = sorted(set(fa.cfg.globals) & set(fb.cfg.globals))
    for name in shared_globals:
        props.append(Proposition(fa.cfg.globals[name], fb.cfg.globals[name]))
    shared_constants = set(fa.cfg.constants) & set(fb.cfg.constants)
    for key in sorted(shared_constants, key=repr):
        props.append(Proposition(fa.cfg.constants[key], fb.cfg.constants[key]))
    for ua in fa.cfg.uninit.values():
        for ub in fb.cfg.uninit.values():
            props.append(Proposition(ua, ub))
    return BaseCases(props)


def _condition_for(left: Value, right: Value) -> Optional[Proposition]:
    """The proposition a dependency position needs, or None when that
    proposition could never be proven (mismatched value kinds, unequal
    constants, different parameter positions, different global names,
    incompatible instruction operators)."""
    if isinstance(left, Instruction) and isinstance(right, Instruction):
        if operators_compatible(left, right):
            return Proposition(left, right)
        return None
    if isinstance(left, Constant) and isinstance(right, Constant):
        if type(left.value) is type(right.value) and left.value == right.value:
            return Proposition(left, right)
        return None
    if isinstance(left, Parameter) and isinstance(right, Parameter):
        if left.position == right.position:
            return Proposition(left, right)
        return None
    if isinstance(left, GlobalVar) and isinstance(right, GlobalVar):
        if left.name == right.name:
            return Proposition(left, right)
        return None
    if isinstance(left, Uninit) and isinstance(right, Uninit):
        return Proposition(left, right)
    return None


def generate_lemmas(fa: AnalyzedFn, fb: AnalyzedFn,
                    options=None) -> Tuple[List[Lemma], BaseCases]:
    """Build all lemmas for one function pair.

    Instruction pairs whose operators, operand counts, or labeled control
    dependencies cannot match get no lemmas at all. Options control loop
    handling (`partial_loop`) and whether control dependencies participate
    (`use_control_deps`).
    """
    from .infer import AlignOptions  # circular-import-free default
    if options is None:
        options = AlignOptions()

    base = make_base_cases(fa, fb)
    lemmas: List[Lemma] = []

    buckets_b: Dict[tuple, List[Instruction]] = {}
    for q in fb.instructions:
        buckets_b.setdefault(_bucket_key(q, fb, options), []).append(q)

    for p in fa.instructions:
        key = _bucket_key(p, fa, options)
        for q in buckets_b.get(key, ()):
            lemmas.extend(_pair_lemmas(p, q, fa, fb, options))
    return lemmas, base


def _bucket_key(instr: Instruction, fn: AnalyzedFn, options) -> tuple:
    op = (instr.op, None) if instr.op == CALL_INDIRECT_OP else instr.opkey()
    if options.use_control_deps:
        labels = tuple(label for _, label in fn.ctrl_deps[instr])
    else:
        labels = ()
    return (op, len(instr.operands), labels)


def _pair_lemmas(p: Instruction, q: Instruction, fa: AnalyzedFn, fb: AnalyzedFn,
                 options) -> List[Lemma]:
    conclusion = Proposition(p, q)
    data_count = max(1, len(p.operands))
    ctrl_a = fa.ctrl_deps[p] if options.use_control_deps else []
    ctrl_b = fb.ctrl_deps[q] if options.use_control_deps else []
    n = data_count + len(ctrl_a)

    out: List[Lemma] = []
    if not p.operands:
        out.append(Lemma(TRUE, conclusion, 0, n, TAG_ZERO_OPERAND))
    else:
        phi_back_a = fa.phi_back_positions(p) if p.op == PHI_OP else set()
        phi_back_b = fb.phi_back_positions(q) if q.op == PHI_OP else set()
        for i, (left, right) in enumerate(zip(p.operands, q.operands)):
            condition = _condition_for(left, right)
            is_back = i in phi_back_a and i in phi_back_b
            if is_back:
                if not options.partial_loop and condition is not None:
                    out.append(Lemma(condition, conclusion, i, n, TAG_BACK_DEPENDENCY))
                out.append(Lemma(TRUE, conclusion, i, n, TAG_LOOP_ASSUMPTION))
            else:
                if condition is None:
                    return []  # this position can never fire; the pair is dead
                out.append(Lemma(condition, conclusion, i, n, TAG_DATA))

    back_a, back_b = fa.ctrl_back[p], fb.ctrl_back[q]
    for j, ((br_a, label_a), (br_b, label_b)) in enumerate(zip(ctrl_a, ctrl_b)):
        position = data_count + j
        assert label_a == label_b, "bucketing must pre-match control labels"
        condition = _condition_for(br_a, br_b)
        is_back = back_a[j] and back_b[j]
        if is_back:
            if not options.partial_loop and condition is not None:
                out.append(Lemma(condition, conclusion, position, n, TAG_BACK_DEPENDENCY))
            out.append(Lemma(TRUE, conclusion, position, n, TAG_LOOP_ASSUMPTION))
        else:
            if condition is None:
                return []
            out.append(Lemma(condition, conclusion, position, n, TAG_CONTROL))
    return out


class LemmaIndex:
    """Lemmas keyed by condition for constant-time firing during inference.

    Unconditional lemmas (zero-operand and loop assumptions) are kept
    separately as the initial firings.
    """

    def __init__(self, lemmas: List[Lemma]):
        self.by_condition: Dict[Proposition, List[Lemma]] = {}
        self.true_lemmas: List[Lemma] = []
        self.assumption_lemmas: List[Lemma] = []
        self.total = len(lemmas)
        for lemma in lemmas:
            if lemma.condition is TRUE:
                if lemma.tag == TAG_LOOP_ASSUMPTION:
                    self.assumption_lemmas.append(lemma)
                else:
                    self.true_lemmas.append(lemma)
            else:
                self.by_condition.setdefault(lemma.condition, []).append(lemma)

    def lookup(self, condition: Proposition) -> List[Lemma]:
        return self.by_condition.get(condition, [])


def index_lemmas(lemmas: List[Lemma]) -> LemmaIndex:
    return LemmaIndex(lemmas)


def lemmas_to_json(lemmas: List[Lemma]) -> list:
    """Plain-data lemma dump for the CLI's debugging output."""
    def value_ref(v: Value):
        if isinstance(v, Instruction):
            return {"instr": v.id, "op": v.op}
        return {"value": repr(v)}

    out = []
    for lemma in lemmas:
        cond = ("true" if lemma.condition is TRUE else
                {"left": value_ref(lemma.condition.left),
                 "right": value_ref(lemma.condition.right)})
        out.append({
            "condition": cond,
            "conclusion": {"left": value_ref(lemma.conclusion.left),
                           "right": value_ref(lemma.conclusion.right)},
            "position": lemma.position,
            "n": lemma.n,
            "tag": lemma.tag,
        })
    return out
