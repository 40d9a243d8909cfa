"""Concrete-interpreter oracle for differential testing.

Runs both functions of a pair on sampled inputs, recording every value each
instruction produces, and derives a reference alignment: two instructions
count as oracle-equivalent when, for every sampled input, each value
produced by the less-executed instruction also occurs among the values of
the other. That containment rule mirrors how unequal loop trip counts are
tolerated, and it inherits the same looseness: rarely-executed instructions
can spuriously pair. The oracle is therefore used for precision checks of
the alignment, never for recall.
"""

import random
import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .align import Alignment
from .analyze import AnalyzedFn
from .ir import (ADDR_FIELD_OP, ADDR_OP, BRANCH_OP, CALL_INDIRECT_OP, CALL_OP,
                 LOAD_FIELD_OP, LOAD_INDEX_OP, LOAD_OP, PHI_OP, RETURN_OP,
                 STORE_FIELD_OP, STORE_INDEX_OP, STORE_OP, BasicBlock,
                 Constant, GlobalVar, Instruction, Parameter, Uninit, Value)

MODELED_CALLS = ("write", "printf", "strcmp", "strlen", "malloc", "free")

DEFAULT_STEP_LIMIT = 10_000
ARRAY_PARAM_SIZE = 4


class InterpError(Exception):
    pass


class StepLimitExceeded(InterpError):
    pass


class UnmodeledCall(InterpError):
    pass


@dataclass
class Limits:
    max_steps: int = DEFAULT_STEP_LIMIT


@dataclass
class Trace:
    """Execution log: per instruction, (input id, execution index, value)."""

    values: Dict[int, List[Tuple[int, int, object]]] = field(default_factory=dict)
    returns: Dict[int, object] = field(default_factory=dict)
    effects: Dict[int, List[tuple]] = field(default_factory=dict)

    def record(self, input_id: int, instr: Instruction, index: int, value: object):
        self.values.setdefault(instr.id, []).append((input_id, index, value))

    def values_for(self, instr_id: int, input_id: int) -> List[object]:
        return [v for iid, _, v in self.values.get(instr_id, ()) if iid == input_id]


def _c_div(a: int, b: int) -> int:
    if b == 0:
        raise InterpError("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _c_mod(a: int, b: int) -> int:
    return a - _c_div(a, b) * b


_BINOPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _c_div,
    "%": _c_mod,
    "&": lambda a, b: a & b,
    "|": lambda a, b: a | b,
    "^": lambda a, b: a ^ b,
    "<<": lambda a, b: a << b,
    ">>": lambda a, b: a >> b,
    "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b),
    ">": lambda a, b: int(a > b),
    ">=": lambda a, b: int(a >= b),
    "==": lambda a, b: int(a == b),
    "!=": lambda a, b: int(a != b),
}


def _global_initial(name: str) -> int:
    # Deterministic and identical across both functions of a pair, as if the
    # program state at entry were the same.
    return zlib.crc32(name.encode()) % 7 - 3


class _Machine:
    def __init__(self, fn: AnalyzedFn, args: Sequence[object], trace: Trace,
                 input_id: int, limits: Limits):
        self.fn = fn
        self.trace = trace
        self.input_id = input_id
        self.limits = limits
        self.steps = 0
        self.env: Dict[int, object] = {}
        self.buffers: Dict[tuple, List[int]] = {}
        self.fields: Dict[tuple, int] = {}
        self.exec_index: Dict[int, int] = {}
        self.malloc_count = 0
        for i, param in enumerate(fn.params):
            value = args[i] if i < len(args) else 0
            if isinstance(value, (tuple, list)):
                key = ("arg", i)
                self.buffers[key] = list(value)
                value = ("ptr", "arg", i, 0)
            self.env[id(param)] = value

    def value_of(self, operand: Value) -> object:
        if isinstance(operand, Instruction):
            try:
                return self.env[id(operand)]
            except KeyError:
                raise InterpError(f"use of {operand!r} before any execution")
        if isinstance(operand, Constant):
            if isinstance(operand.value, bytes):
                return ("ptr", "str", operand.value, 0)
            return operand.value
        if isinstance(operand, Parameter):
            return self.env[id(operand)]
        if isinstance(operand, GlobalVar):
            return _global_initial(operand.name)
        if isinstance(operand, Uninit):
            # Uninitialized memory behaves as one shared constant.
            return 0
        raise InterpError(f"unsupported operand {operand!r}")

    def record(self, instr: Instruction, value: object):
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise StepLimitExceeded(f"{self.fn.name}: exceeded {self.limits.max_steps} steps")
        index = self.exec_index.get(instr.id, 0)
        self.exec_index[instr.id] = index + 1
        self.trace.record(self.input_id, instr, index, value)
        self.env[id(instr)] = value

    def run(self) -> object:
        block = self.fn.cfg.entry
        prev: Optional[BasicBlock] = None
        while True:
            next_block, label, returned, done = self.exec_block(block, prev)
            if done:
                return returned
            prev = block
            block = next_block

    def exec_block(self, block: BasicBlock, prev: Optional[BasicBlock]):
        # Phis evaluate in parallel against the previous environment.
        phis = [i for i in block.instructions if i.op == PHI_OP]
        if phis:
            assert prev is not None, "phi in entry block"
            staged = []
            for phi in phis:
                position = phi.phi_preds.index(prev)
                staged.append((phi, self.value_of(phi.operands[position])))
            for phi, value in staged:
                self.record(phi, value)
        for instr in block.instructions:
            if instr.op == PHI_OP:
                continue
            if instr.op == BRANCH_OP:
                cond = self.value_of(instr.operands[0])
                taken = _truthy(cond)
                self.record(instr, int(taken))
                label = "true" if taken else "false"
                for succ, edge_label in block.succs:
                    if edge_label == label:
                        return succ, label, None, False
                raise InterpError("branch without matching edge")
            if instr.op == RETURN_OP:
                value = self.value_of(instr.operands[0]) if instr.operands else 0
                self.record(instr, value)
                return None, None, value, True
            self.exec_instr(instr)
        if not block.succs:
            return None, None, 0, True
        succ, _ = block.succs[0]
        return succ, None, None, False

    def exec_instr(self, instr: Instruction):
        op = instr.op
        if op in _BINOPS:
            a = self.value_of(instr.operands[0])
            b = self.value_of(instr.operands[1])
            self.record(instr, _apply_binop(op, a, b))
            return
        if op == "neg":
            self.record(instr, -self.value_of(instr.operands[0]))
            return
        if op == "not":
            self.record(instr, int(not _truthy(self.value_of(instr.operands[0]))))
            return
        if op == "bnot":
            self.record(instr, ~self.value_of(instr.operands[0]))
            return
        if op == CALL_OP:
            self.exec_call(instr)
            return
        if op == LOAD_OP:
            self.record(instr, self.load_pointer(self.value_of(instr.operands[0])))
            return
        if op == LOAD_INDEX_OP:
            base = self.value_of(instr.operands[0])
            index = self.value_of(instr.operands[1])
            self.record(instr, self.load_pointer(_pointer_add(base, index)))
            return
        if op == STORE_OP:
            value = self.value_of(instr.operands[1])
            self.store_pointer(self.value_of(instr.operands[0]), value)
            self.record(instr, value)
            return
        if op == STORE_INDEX_OP:
            base = self.value_of(instr.operands[0])
            index = self.value_of(instr.operands[1])
            value = self.value_of(instr.operands[2])
            self.store_pointer(_pointer_add(base, index), value)
            self.record(instr, value)
            return
        if op == LOAD_FIELD_OP:
            base = self.value_of(instr.operands[0])
            self.record(instr, self.fields.get(_field_key(base, instr.payload), 0))
            return
        if op == STORE_FIELD_OP:
            base = self.value_of(instr.operands[0])
            value = self.value_of(instr.operands[1])
            self.fields[_field_key(base, instr.payload)] = value
            self.record(instr, value)
            return
        if op in (ADDR_OP, ADDR_FIELD_OP):
            raise UnmodeledCall("address-of is outside the modeled subset")
        if op == CALL_INDIRECT_OP:
            raise UnmodeledCall("indirect calls are outside the modeled subset")
        raise InterpError(f"no interpretation for operator {op!r}")

    def exec_call(self, instr: Instruction):
        name = instr.payload
        args = [self.value_of(v) for v in instr.operands]
        if name not in MODELED_CALLS:
            raise UnmodeledCall(f"call to unmodeled function {name!r}")
        effects = self.trace.effects.setdefault(self.input_id, [])
        if name == "write":
            fd, buf, count = (args + [0, 0, 0])[:3]
            data = self.read_bytes(buf, count)
            effects.append(("write", fd, data, count))
            self.record(instr, count)
        elif name == "printf":
            fmt = self.read_cstring(args[0]) if args else ()
            effects.append(("printf", fmt, tuple(args[1:])))
            self.record(instr, len(fmt))
        elif name == "strlen":
            self.record(instr, len(self.read_cstring(args[0])))
        elif name == "strcmp":
            a = self.read_cstring(args[0])
            b = self.read_cstring(args[1])
            self.record(instr, (a > b) - (a < b))
        elif name == "malloc":
            self.malloc_count += 1
            key = ("malloc", self.malloc_count)
            size = args[0] if args and isinstance(args[0], int) else 0
            self.buffers[key] = [0] * max(0, min(size, 4096))
            self.record(instr, ("ptr",) + key + (0,))
        elif name == "free":
            effects.append(("free",))
            self.record(instr, 0)

    def load_pointer(self, pointer) -> int:
        kind, key, offset = _split_pointer(pointer)
        if kind == "str":
            data = key
            if 0 <= offset < len(data):
                return data[offset]
            return 0
        buf = self.buffers.get((kind, key))
        if buf is None or not (0 <= offset < len(buf)):
            raise InterpError("out-of-bounds or wild pointer load")
        return buf[offset]

    def store_pointer(self, pointer, value):
        kind, key, offset = _split_pointer(pointer)
        if kind == "str":
            raise InterpError("store into string literal")
        buf = self.buffers.get((kind, key))
        if buf is None or not (0 <= offset < len(buf)):
            raise InterpError("out-of-bounds or wild pointer store")
        buf[offset] = value

    def read_bytes(self, pointer, count: int) -> tuple:
        if not isinstance(count, int) or count < 0:
            return ()
        out = []
        for k in range(min(count, 4096)):
            out.append(self.load_pointer(_pointer_add(pointer, k)))
        return tuple(out)

    def read_cstring(self, pointer) -> tuple:
        out = []
        for k in range(4096):
            try:
                ch = self.load_pointer(_pointer_add(pointer, k))
            except InterpError:
                break
            if ch == 0:
                break
            out.append(ch)
        return tuple(out)


def _truthy(value) -> bool:
    if isinstance(value, tuple):
        return True  # any pointer is nonnull here
    return value != 0


def _apply_binop(op: str, a, b):
    if isinstance(a, tuple) or isinstance(b, tuple):
        if op == "+":
            return _pointer_add(a, b) if isinstance(a, tuple) else _pointer_add(b, a)
        if op == "-" and isinstance(a, tuple) and isinstance(b, int):
            return _pointer_add(a, -b)
        if op in ("==", "!="):
            eq = a == b
            return int(eq if op == "==" else not eq)
        raise InterpError(f"pointer arithmetic {op!r} not modeled")
    return _BINOPS[op](a, b)


def _pointer_add(pointer, delta):
    if not isinstance(pointer, tuple) or not isinstance(delta, int):
        raise InterpError("indexing a non-pointer")
    kind, key, offset = _split_pointer(pointer)
    return ("ptr", kind, key, offset + delta)


def _split_pointer(pointer):
    if not (isinstance(pointer, tuple) and len(pointer) == 4 and pointer[0] == "ptr"):
        raise InterpError("dereferencing a non-pointer")
    return pointer[1], pointer[2], pointer[3]


def _field_key(base, fieldname):
    if isinstance(base, tuple):
        return (base, fieldname)
    return (("scalar", base), fieldname)


####################
#   Entry points   #
####################


def interpret(fn: AnalyzedFn, args: Sequence[object],
              limits: Optional[Limits] = None, input_id: int = 0,
              trace: Optional[Trace] = None) -> Trace:
    """Execute one function on one argument vector, recording all values.

    :raises StepLimitExceeded: when the run exceeds limits.max_steps.
    :raises UnmodeledCall: on calls outside the modeled external set.
    :raises InterpError: on memory misuse or division by zero.
    """
    if limits is None:
        limits = Limits()
    if trace is None:
        trace = Trace()
    machine = _Machine(fn, args, trace, input_id, limits)
    result = machine.run()
    trace.returns[input_id] = result
    return trace


def run_on_inputs(fn: AnalyzedFn, inputs: Sequence[Sequence[object]],
                  limits: Optional[Limits] = None) -> Trace:
    """Interpret on every input, accumulating one combined trace.

    Recording stops once the shared step budget is spent, mirroring a bounded
    collection of instruction executions.
    """
    if limits is None:
        limits = Limits()
    trace = Trace()
    budget = limits.max_steps
    used = 0
    for input_id, args in enumerate(inputs):
        remaining = budget - used
        if remaining <= 0:
            break
        before = sum(len(v) for v in trace.values.values())
        try:
            interpret(fn, args, Limits(max_steps=remaining), input_id, trace)
        except StepLimitExceeded:
            if remaining == budget:
                raise  # a single input exhausted the whole budget: runaway
            break  # shared budget spent; keep what was collected
        used += sum(len(v) for v in trace.values.values()) - before
    return trace


def default_inputs(fa: AnalyzedFn, fb: AnalyzedFn, seed: int = 0,
                   random_count: int = 64) -> List[tuple]:
    """Sampled argument vectors shared by both functions.

    Exhaustive over {-2..3} per integer parameter when there are at most
    three and all are integers; otherwise a fixed-seed random sample.
    Pointer-typed parameters receive small integer arrays.
    """
    count = max(len(fa.params), len(fb.params))
    is_array = [False] * count
    for fn in (fa, fb):
        for i, p in enumerate(fn.params):
            if "*" in p.type_text or "[]" in p.type_text:
                is_array[i] = True
    if count == 0:
        return [()]
    if count <= 3 and not any(is_array):
        domain = range(-2, 4)
        vectors = [()]
        for _ in range(count):
            vectors = [v + (x,) for v in vectors for x in domain]
        return vectors
    rng = random.Random(seed)
    vectors = []
    for _ in range(random_count):
        vector = []
        for i in range(count):
            if is_array[i]:
                vector.append(tuple(rng.randrange(-2, 4) for _ in range(ARRAY_PARAM_SIZE)))
            else:
                vector.append(rng.randrange(-2, 4))
        vectors.append(tuple(vector))
    return vectors


class OracleAlignment:
    """Instruction pairs equivalent under the sampled-input criterion."""

    def __init__(self, pairs: Set[Tuple[int, int]], inputs_used: int):
        self.pairs = pairs
        self.inputs_used = inputs_used

    def contains(self, a: Instruction, b: Instruction) -> bool:
        return (a.id, b.id) in self.pairs

    def __len__(self):
        return len(self.pairs)


def oracle_align(fa: AnalyzedFn, fb: AnalyzedFn,
                 inputs: Sequence[Sequence[object]],
                 limits: Optional[Limits] = None) -> OracleAlignment:
    """Build the reference alignment from concrete runs.

    A pair is included when on every input, with l <= k execution counts,
    each of the l values occurs among the k values. Interpreter errors
    propagate; callers exclude the pair of functions and report.
    """
    trace_a = run_on_inputs(fa, inputs, limits)
    trace_b = run_on_inputs(fb, inputs, limits)
    n_inputs = len(inputs)

    def per_input_sets(trace: Trace, instrs: List[Instruction]):
        table: Dict[int, List[Tuple[frozenset, int]]] = {}
        for instr in instrs:
            rows = []
            for input_id in range(n_inputs):
                values = trace.values_for(instr.id, input_id)
                rows.append((frozenset(values), len(values)))
            table[instr.id] = rows
        return table

    table_a = per_input_sets(trace_a, fa.instructions)
    table_b = per_input_sets(trace_b, fb.instructions)

    pairs: Set[Tuple[int, int]] = set()
    for a in fa.instructions:
        rows_a = table_a[a.id]
        for b in fb.instructions:
            rows_b = table_b[b.id]
            ok = True
            for (set_a, count_a), (set_b, count_b) in zip(rows_a, rows_b):
                small, large = (set_a, set_b) if count_a <= count_b else (set_b, set_a)
                if not small <= large:
                    ok = False
                    break
            if ok:
                pairs.add((a.id, b.id))
    return OracleAlignment(pairs, n_inputs)


def precision(alignment: Alignment, oracle: OracleAlignment) -> Optional[float]:
    """|aligned pairs the oracle confirms| / |aligned pairs|, or None when
    the alignment is empty (vacuous)."""
    if not alignment.pairs:
        return None
    confirmed = sum(1 for a, b in alignment.pairs if oracle.contains(a, b))
    return confirmed / len(alignment.pairs)


def trace_to_jsonl(fn: AnalyzedFn, trace: Trace) -> str:
    """One JSON object per instruction, for debugging oracle disagreements."""
    import json

    lines = []
    for instr in fn.instructions:
        rows = trace.values.get(instr.id, [])
        lines.append(json.dumps({
            "function": fn.name,
            "instr": instr.id,
            "op": instr.op,
            "values": [[input_id, index, repr(value) if isinstance(value, tuple) else value]
                       for input_id, index, value in rows],
        }, sort_keys=True))
    return "\n".join(lines) + "\n"
