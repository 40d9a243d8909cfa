"""Three-address intermediate representation and the AST -> CFG lowering.

The lowering desugars surface constructs so that very similar code produces
identical instruction streams: compound assignments and ++/-- expand to
plain arithmetic, `for` becomes init plus `while`, short-circuit operators
and ternaries become branches, `switch` becomes a comparison chain with
fall-through tails duplicated, and casts are erased entirely (types play no
part in alignment). Every memory write is a store* instruction and every
memory read a load* instruction; a store's result represents the new state
of the written location and is threaded into later loads of the same base
variable.
"""

from typing import Dict, List, Optional, Set, Tuple

from . import cfront
from .cfront import (Assign, Bin, Block, Break, Call, CastExpr, Comma, Cond,
                     Continue, DeclStmt, DoWhile, Empty, ErrorKind, ExprStmt,
                     For, If, Index, Member, Name, Num, Return, Span, Stmt,
                     Str, SubsetError, Switch, Unary, While)

####################
#     Values       #
####################


class Value:
    """Anything that can appear as an instruction operand."""

    __slots__ = ()


class Constant(Value):
    """A literal, normalized across suffix spellings (0LL == 0).

    String and character literals are identified by exact byte content.
    Constants are interned per function so equal literals are one value.
    """

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __repr__(self):
        if isinstance(self.value, bytes):
            return repr(self.value)
        return str(self.value)


class Parameter(Value):
    __slots__ = ("position", "name", "type_text", "assigned_names")

    def __init__(self, position: int, name: Optional[str], type_text: str = ""):
        self.position = position
        self.name = name
        self.type_text = type_text
        self.assigned_names: List[str] = [name] if name else []

    def __repr__(self):
        return self.name or f"<param{self.position}>"


class GlobalVar(Value):
    __slots__ = ("name", "assigned_names")

    def __init__(self, name: str):
        self.name = name
        self.assigned_names: List[str] = []

    def __repr__(self):
        return f"@{self.name}"


class Uninit(Value):
    """The value of a variable read before any assignment.

    One instance per variable; all uninitialized values are mutually
    alignable, the same way equal constants are.
    """

    __slots__ = ("var",)

    def __init__(self, var: str):
        self.var = var

    def __repr__(self):
        return f"<uninit:{self.var}>"


class Instruction(Value):
    """One operation: an operator applied to an ordered operand list.

    Operand order is semantically meaningful and is never changed except by
    the documented commutative-constant normalization. The instruction is
    itself the value its result binds to. `assigned_names` records which
    source variables the result was assigned to (directly or through copies
    removed by copy propagation); it feeds the variable-name map.
    """

    __slots__ = ("id", "op", "payload", "operands", "block", "assigned_names",
                 "merge_var", "span", "phi_preds")

    def __init__(self, op: str, operands: List[Value], payload=None,
                 span: Optional[Span] = None):
        self.id: int = -1
        self.op = op
        self.payload = payload
        self.operands = operands
        self.block: Optional["BasicBlock"] = None
        self.assigned_names: List[str] = []
        # For phi instructions: the variable being merged (display only) and
        # the predecessor block of each operand, parallel to `operands`.
        self.merge_var: Optional[str] = None
        self.phi_preds: Optional[List["BasicBlock"]] = None
        self.span = span

    def opkey(self):
        """Operator identity: kind plus payload.

        Two instructions can only ever align when their opkeys match, except
        indirect calls, whose callee is compared as a value instead.
        """
        return (self.op, self.payload)

    def __repr__(self):
        args = ", ".join(_short(v) for v in self.operands)
        head = f"%{self.id}" if self.id >= 0 else "%?"
        name = self.op if self.payload is None else f"{self.op}[{self.payload}]"
        return f"{head} = {name}({args})"


def _short(v: Value) -> str:
    if isinstance(v, Instruction):
        return f"%{v.id}"
    return repr(v)


# Operator vocabulary. A few members are reserved for IR consumers even
# though the current lowering never emits them: `switch` is desugared to a
# comparison chain, casts are erased, globals are plain values, and
# constants appear directly as operands.
OP_ARITH = {"+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>"}
OP_COMPARE = {"<", "<=", ">", ">=", "==", "!="}
OP_UNARY = {"neg", "not", "bnot"}
COMMUTATIVE = {"+", "*", "&", "|", "^", "==", "!="}
PHI_OP = "phi"
COPY_OP = "copy"
BRANCH_OP = "branch"
RETURN_OP = "return"
CALL_OP = "call"
CALL_INDIRECT_OP = "call-indirect"
LOAD_OP = "load"
STORE_OP = "store"
LOAD_INDEX_OP = "load-index"
STORE_INDEX_OP = "store-index"
LOAD_FIELD_OP = "load-field"
STORE_FIELD_OP = "store-field"
ADDR_OP = "address-of"
ADDR_FIELD_OP = "address-of-field"
RESERVED_OPS = ("switch-branch", "cast", "load-global", "const-materialize")

EFFECT_OPS = {CALL_OP, CALL_INDIRECT_OP, STORE_OP, STORE_INDEX_OP, STORE_FIELD_OP}


####################
#       CFG        #
####################


class BasicBlock:
    __slots__ = ("id", "instructions", "succs", "preds")

    def __init__(self, bid: int):
        self.id = bid
        self.instructions: List[Instruction] = []
        # Ordered successor edges: (block, label) with label one of
        # 'true' / 'false' / None (unconditional).
        self.succs: List[Tuple["BasicBlock", Optional[str]]] = []
        self.preds: List["BasicBlock"] = []

    def terminator(self) -> Optional[Instruction]:
        if self.instructions and self.instructions[-1].op in (BRANCH_OP, RETURN_OP):
            return self.instructions[-1]
        return None

    def __repr__(self):
        return f"B{self.id}"

    def __hash__(self):
        return id(self)

    def __eq__(self, other):
        return self is other


class Cfg:
    """A function lowered to basic blocks of instructions.

    Invariants: exactly one entry block, every block reachable from it, and
    the only branch instructions are block terminators.
    """

    def __init__(self, name: str, params: List[Parameter]):
        self.name = name
        self.params = params
        self.blocks: List[BasicBlock] = []
        self.entry: Optional[BasicBlock] = None
        self.constants: Dict[object, Constant] = {}
        self.globals: Dict[str, GlobalVar] = {}
        self.uninit: Dict[str, Uninit] = {}
        self.in_ssa = False

    def new_block(self) -> BasicBlock:
        block = BasicBlock(len(self.blocks))
        self.blocks.append(block)
        return block

    def constant(self, value) -> Constant:
        key = (type(value).__name__, value)
        if key not in self.constants:
            self.constants[key] = Constant(value)
        return self.constants[key]

    def global_var(self, name: str) -> GlobalVar:
        if name not in self.globals:
            self.globals[name] = GlobalVar(name)
        return self.globals[name]

    def uninit_value(self, var: str) -> Uninit:
        if var not in self.uninit:
            self.uninit[var] = Uninit(var)
        return self.uninit[var]

    def instructions(self) -> List[Instruction]:
        return [instr for block in self.blocks for instr in block.instructions]

    def renumber(self):
        """Assign %N value numbers in block order."""
        n = 0
        for block in self.blocks:
            for instr in block.instructions:
                instr.id = n
                instr.block = block
                n += 1

    def dump(self) -> str:
        """One instruction per line: %N = op(args) [block B, deps ...]."""
        lines = [f"function {self.name}({', '.join(map(repr, self.params))})"]
        for block in self.blocks:
            edges = ", ".join(
                f"{succ}:{label or 'always'}" for succ, label in block.succs
            )
            lines.append(f"  {block}:" + (f"  -> {edges}" if edges else ""))
            for instr in block.instructions:
                note = f" ; {instr.merge_var}" if instr.merge_var else ""
                lines.append(f"    {instr!r} [block {block.id}]{note}")
        return "\n".join(lines)


def add_edge(src: BasicBlock, dst: BasicBlock, label: Optional[str] = None):
    src.succs.append((dst, label))
    dst.preds.append(src)


####################
#    Lowering      #
####################


class _SlotRef(Value):
    """Pre-SSA placeholder operand: the current value of a variable slot.

    Resolved to a concrete Value during SSA renaming.
    """

    __slots__ = ("slot",)

    def __init__(self, slot: str):
        self.slot = slot

    def __repr__(self):
        return f"${self.slot}"


def lower(ast: cfront.Ast) -> Cfg:
    """Lower a classified AST to a CFG of three-address instructions.

    :raises SubsetError: with IRREDUCIBLE_CFG left to loop analysis; lowering
        itself only raises PARSE_ERROR-kind issues for malformed trees.
    """
    return _LowerVisitor(ast).run()


class _LowerVisitor:
    def __init__(self, ast: cfront.Ast):
        if not ast.classified:
            cfront.classify_identifiers(ast)
        self.ast = ast
        params = [Parameter(i, p.name, p.type_text) for i, p in enumerate(ast.params)]
        self.cfg = Cfg(ast.name, params)
        self.block: Optional[BasicBlock] = self.cfg.new_block()
        self.cfg.entry = self.block
        self.break_targets: List[BasicBlock] = []
        self.continue_targets: List[BasicBlock] = []
        # Copies of variables are recorded as explicit 'copy' instructions so
        # that SSA renaming and copy propagation can track provenance.

    # --- plumbing -----------------------------------------------------------

    def emit(self, instr: Instruction) -> Instruction:
        assert self.block is not None, "emitting into a closed block"
        self.block.instructions.append(instr)
        return instr

    def reachable(self) -> bool:
        return self.block is not None

    def close_block(self):
        self.block = None

    def start_block(self, block: BasicBlock):
        self.block = block

    def jump_to(self, target: BasicBlock):
        if self.block is not None:
            add_edge(self.block, target)
            self.block = None

    def run(self) -> Cfg:
        self.lower_stmt(self.ast.body)
        if self.block is not None:
            # Fell off the end: synthesize a bare return.
            self.emit(Instruction(RETURN_OP, []))
            self.close_block()
        _cleanup(self.cfg)
        self.cfg.renumber()
        return self.cfg

    # --- variable slots -------------------------------------------------------

    def slot_of(self, name_node: Name) -> str:
        assert name_node.kind in ("param", "local", "global"), \
            f"value use of {name_node.kind} identifier {name_node.name}"
        return f"{name_node.kind}:{name_node.symbol}"

    def slot_source_name(self, slot: str) -> Optional[str]:
        kind, _, sym = slot.partition(":")
        if kind == "local":
            return sym.split("#")[0]
        if kind in ("param", "global"):
            return sym
        return None  # synthetic memory-state slots have no source name

    def read_slot(self, slot: str) -> Value:
        return _SlotRef(slot)

    def write_slot(self, slot: str, value: Value):
        """Record 'slot := value' as a copy instruction.

        Copy propagation removes these later, folding the target name into
        the surviving value's provenance.
        """
        copy = Instruction(COPY_OP, [value], payload=slot)
        name = self.slot_source_name(slot)
        if name is not None:
            copy.assigned_names.append(name)
        self.emit(copy)

    # --- expressions ----------------------------------------------------------

    def lower_expr(self, expr) -> Value:
        if isinstance(expr, Num):
            return self.cfg.constant(expr.value)
        if isinstance(expr, Str):
            return self.cfg.constant(expr.value)
        if isinstance(expr, Name):
            if expr.kind == "function":
                # A function name in value position (e.g. taking its address)
                # reads as a global holding that function.
                return self.cfg.global_var(expr.symbol)
            if expr.kind == "global":
                return self.read_slot(self.slot_of(expr))
            return self.read_slot(self.slot_of(expr))
        if isinstance(expr, CastExpr):
            # Types are ignored by alignment; casts are transparent.
            return self.lower_expr(expr.operand)
        if isinstance(expr, Comma):
            self.lower_expr(expr.left)
            return self.lower_expr(expr.right)
        if isinstance(expr, Bin):
            if expr.op in ("&&", "||"):
                return self.lower_short_circuit_value(expr)
            left = self.lower_expr(expr.left)
            right = self.lower_expr(expr.right)
            return self.emit(Instruction(expr.op, [left, right], span=expr.span))
        if isinstance(expr, Unary):
            return self.lower_unary(expr)
        if isinstance(expr, Assign):
            return self.lower_assign(expr)
        if isinstance(expr, Cond):
            return self.lower_ternary(expr)
        if isinstance(expr, Call):
            return self.lower_call(expr)
        if isinstance(expr, Index):
            base = self.lower_expr(expr.base)
            index = self.lower_expr(expr.index)
            return self.emit_load(LOAD_INDEX_OP, None, [base, index], expr)
        if isinstance(expr, Member):
            base = self.lower_expr(expr.base)
            return self.emit_load(LOAD_FIELD_OP, expr.name, [base], expr)
        raise SubsetError(ErrorKind.PARSE_ERROR, f"cannot lower expression {type(expr).__name__}")

    def lower_unary(self, expr: Unary) -> Value:
        if expr.op in ("++", "--"):
            return self.lower_incdec(expr)
        if expr.op == "*":
            pointer = self.lower_expr(expr.operand)
            return self.emit_load(LOAD_OP, None, [pointer], expr)
        if expr.op == "&":
            return self.lower_address_of(expr.operand, expr)
        operand = self.lower_expr(expr.operand)
        op = {"-": "neg", "!": "not", "~": "bnot"}[expr.op]
        if op == "neg" and isinstance(operand, Constant) and isinstance(operand.value, (int, float)):
            return self.cfg.constant(-operand.value)
        return self.emit(Instruction(op, [operand], span=expr.span))

    def lower_address_of(self, operand, expr) -> Value:
        # &a[i] is pointer arithmetic; &p->f keeps the field as payload;
        # &x on a plain variable is an opaque unary operator.
        if isinstance(operand, Index):
            base = self.lower_expr(operand.base)
            index = self.lower_expr(operand.index)
            return self.emit(Instruction("+", [base, index], span=expr.span))
        if isinstance(operand, Member):
            base = self.lower_expr(operand.base)
            return self.emit(Instruction(ADDR_FIELD_OP, [base], payload=operand.name, span=expr.span))
        if isinstance(operand, Unary) and operand.op == "*":
            return self.lower_expr(operand.operand)
        value = self.lower_expr(operand)
        return self.emit(Instruction(ADDR_OP, [value], span=expr.span))

    def lower_incdec(self, expr: Unary) -> Value:
        op = "+" if expr.op == "++" else "-"
        one = self.cfg.constant(1)
        read, write = self.lvalue_access(expr.operand)
        old = read()
        new = self.emit(Instruction(op, [old, one], span=expr.span))
        write(new)
        return old if expr.postfix else new

    def lower_assign(self, expr: Assign) -> Value:
        read, write = self.lvalue_access(expr.target)
        if expr.op == "=":
            value = self.lower_expr(expr.value)
        else:
            op = expr.op[:-1]
            old = read()
            rhs = self.lower_expr(expr.value)
            value = self.emit(Instruction(op, [old, rhs], span=expr.span))
        write(value)
        return value

    def lvalue_access(self, target):
        """Return (read, write) closures for an assignable expression.

        Base and index subexpressions are evaluated once, left to right,
        before either closure runs, matching the documented evaluation order
        for compound lvalues.
        """
        if isinstance(target, Name):
            slot = self.slot_of(target)
            return (lambda: self.read_slot(slot),
                    lambda value: self.write_slot(slot, value))
        if isinstance(target, CastExpr):
            return self.lvalue_access(target.operand)
        if isinstance(target, Unary) and target.op == "*":
            pointer = self.lower_expr(target.operand)
            key = self.memory_key(target.operand)
            return (lambda: self.emit_load(LOAD_OP, None, [pointer], target, key),
                    lambda value: self.emit_store(STORE_OP, None, [pointer, value], target, key))
        if isinstance(target, Index):
            base = self.lower_expr(target.base)
            index = self.lower_expr(target.index)
            key = self.memory_key(target.base)
            return (lambda: self.emit_load(LOAD_INDEX_OP, None, [base, index], target, key),
                    lambda value: self.emit_store(STORE_INDEX_OP, None, [base, index, value], target, key))
        if isinstance(target, Member):
            base = self.lower_expr(target.base)
            key = self.memory_key(target.base)
            return (lambda: self.emit_load(LOAD_FIELD_OP, target.name, [base], target, key),
                    lambda value: self.emit_store(STORE_FIELD_OP, target.name, [base, value], target, key))
        raise SubsetError(ErrorKind.PARSE_ERROR, "expression is not assignable",
                          getattr(target, "span", None))

    def memory_key(self, base_expr) -> str:
        """Memory-state slot for an access path, keyed by its root variable.

        All accesses rooted at the same variable share one state stream;
        distinct roots never interfere (aliasing is not modeled).
        """
        root = base_expr
        while True:
            if isinstance(root, (Index, Member)):
                root = root.base
            elif isinstance(root, (Unary, CastExpr)):
                root = root.operand
            elif isinstance(root, Bin):
                root = root.left
            elif isinstance(root, Assign):
                root = root.target
            elif isinstance(root, Call):
                root = root.fn
            else:
                break
        if isinstance(root, Name) and root.kind in ("param", "local", "global"):
            return f"mem:{root.kind}:{root.symbol}"
        return "mem:<anon>"

    def emit_load(self, op: str, payload, operands: List[Value], expr, key: Optional[str] = None) -> Instruction:
        if key is None:
            base = expr.base if isinstance(expr, (Index, Member)) else expr.operand
            key = self.memory_key(base)
        operands = operands + [self.read_slot(key)]
        return self.emit(Instruction(op, operands, payload=payload, span=getattr(expr, "span", None)))

    def emit_store(self, op: str, payload, operands: List[Value], expr, key: str) -> Instruction:
        store = self.emit(Instruction(op, operands, payload=payload, span=getattr(expr, "span", None)))
        # The store's result is the new state of the written location.
        copy = Instruction(COPY_OP, [store], payload=key)
        self.emit(copy)
        return store

    def lower_call(self, expr: Call) -> Instruction:
        callee = expr.fn
        # (*fp)(x) means the same as fp(x); casts around the callee are noise.
        while isinstance(callee, CastExpr) or \
                (isinstance(callee, Unary) and callee.op == "*" and not callee.postfix):
            callee = callee.operand
        if isinstance(callee, Name) and callee.kind == "function":
            args = [self.lower_expr(a) for a in expr.args]
            return self.emit(Instruction(CALL_OP, args, payload=callee.symbol, span=expr.span))
        # Indirect call: the callee value is operand zero, so proving the
        # callees equivalent is just another operand position.
        fn_value = self.lower_expr(callee)
        args = [self.lower_expr(a) for a in expr.args]
        return self.emit(Instruction(CALL_INDIRECT_OP, [fn_value] + args, span=expr.span))

    # --- short-circuit and ternary ---------------------------------------------

    def lower_short_circuit_value(self, expr: Bin) -> Value:
        """Value-position && / ||: branches plus a 0/1 merge."""
        true_block = self.cfg.new_block()
        false_block = self.cfg.new_block()
        join = self.cfg.new_block()
        slot = f"local:__sc#{len(self.cfg.blocks)}"
        self.lower_cond(expr, true_block, false_block)
        self.start_block(true_block)
        self.write_slot(slot, self.cfg.constant(1))
        self.jump_to(join)
        self.start_block(false_block)
        self.write_slot(slot, self.cfg.constant(0))
        self.jump_to(join)
        self.start_block(join)
        return self.read_slot(slot)

    def lower_ternary(self, expr: Cond) -> Value:
        then_block = self.cfg.new_block()
        else_block = self.cfg.new_block()
        join = self.cfg.new_block()
        slot = f"local:__ternary#{len(self.cfg.blocks)}"
        self.lower_cond(expr.cond, then_block, else_block)
        self.start_block(then_block)
        self.write_slot(slot, self.lower_expr(expr.then))
        self.jump_to(join)
        self.start_block(else_block)
        self.write_slot(slot, self.lower_expr(expr.els))
        self.jump_to(join)
        self.start_block(join)
        return self.read_slot(slot)

    def lower_cond(self, expr, true_block: BasicBlock, false_block: BasicBlock):
        """Lower an expression used only for control flow.

        Short-circuit operators become nested branches (no materialized 0/1),
        `!e`, `e == 0` and `e != 0` fold into edge swaps, and constant
        conditions turn into unconditional edges so `while (1)` has no branch
        instruction at all.
        """
        if isinstance(expr, CastExpr):
            return self.lower_cond(expr.operand, true_block, false_block)
        if isinstance(expr, Bin) and expr.op == "&&":
            middle = self.cfg.new_block()
            self.lower_cond(expr.left, middle, false_block)
            self.start_block(middle)
            return self.lower_cond(expr.right, true_block, false_block)
        if isinstance(expr, Bin) and expr.op == "||":
            middle = self.cfg.new_block()
            self.lower_cond(expr.left, true_block, middle)
            self.start_block(middle)
            return self.lower_cond(expr.right, true_block, false_block)
        if isinstance(expr, Unary) and expr.op == "!" and not expr.postfix:
            return self.lower_cond(expr.operand, false_block, true_block)
        if isinstance(expr, Bin) and expr.op in ("==", "!="):
            swap = expr.op == "=="
            for a, b in ((expr.left, expr.right), (expr.right, expr.left)):
                if isinstance(b, Num) and b.value == 0:
                    t, f = (false_block, true_block) if swap else (true_block, false_block)
                    return self.lower_cond(a, t, f)
        value = self.lower_expr(expr)
        if isinstance(value, Constant) and isinstance(value.value, (int, float)):
            target = true_block if value.value != 0 else false_block
            self.jump_to(target)
            return
        if self.block is None:
            return
        self.emit(Instruction(BRANCH_OP, [value], span=getattr(expr, "span", None)))
        add_edge(self.block, true_block, "true")
        add_edge(self.block, false_block, "false")
        self.close_block()

    # --- statements --------------------------------------------------------------

    def lower_stmt(self, stmt: Stmt):
        if not self.reachable():
            return  # dead code after break/continue/return
        if isinstance(stmt, Block):
            for item in stmt.items:
                self.lower_stmt(item)
        elif isinstance(stmt, Empty):
            pass
        elif isinstance(stmt, DeclStmt):
            for decl in stmt.declarators:
                if decl.init is not None:
                    value = self.lower_expr(decl.init)
                    # The declarator's Name node never exists; synthesize the
                    # slot from the classification the init-scope produced.
                    self.write_slot(self.decl_slot(stmt, decl), value)
        elif isinstance(stmt, ExprStmt):
            self.lower_expr(stmt.expr)
        elif isinstance(stmt, If):
            then_block = self.cfg.new_block()
            else_block = self.cfg.new_block()
            join = self.cfg.new_block()
            self.lower_cond(stmt.cond, then_block, else_block)
            self.start_block(then_block)
            self.lower_stmt(stmt.then)
            self.jump_to(join)
            self.start_block(else_block)
            if stmt.els is not None:
                self.lower_stmt(stmt.els)
            self.jump_to(join)
            self.start_block(join)
        elif isinstance(stmt, While):
            header = self.cfg.new_block()
            body = self.cfg.new_block()
            exit_block = self.cfg.new_block()
            self.jump_to(header)
            self.start_block(header)
            self.lower_cond(stmt.cond, body, exit_block)
            self.start_block(body)
            self.break_targets.append(exit_block)
            self.continue_targets.append(header)
            self.lower_stmt(stmt.body)
            self.break_targets.pop()
            self.continue_targets.pop()
            self.jump_to(header)
            self.start_block(exit_block)
        elif isinstance(stmt, DoWhile):
            body = self.cfg.new_block()
            cond_block = self.cfg.new_block()
            exit_block = self.cfg.new_block()
            self.jump_to(body)
            self.start_block(body)
            self.break_targets.append(exit_block)
            self.continue_targets.append(cond_block)
            self.lower_stmt(stmt.body)
            self.break_targets.pop()
            self.continue_targets.pop()
            self.jump_to(cond_block)
            self.start_block(cond_block)
            self.lower_cond(stmt.cond, body, exit_block)
            self.start_block(exit_block)
        elif isinstance(stmt, For):
            if stmt.init is not None:
                self.lower_stmt(stmt.init)
            header = self.cfg.new_block()
            body = self.cfg.new_block()
            step_block = self.cfg.new_block()
            exit_block = self.cfg.new_block()
            self.jump_to(header)
            self.start_block(header)
            if stmt.cond is not None:
                self.lower_cond(stmt.cond, body, exit_block)
            else:
                self.jump_to(body)
            self.start_block(body)
            self.break_targets.append(exit_block)
            self.continue_targets.append(step_block)
            self.lower_stmt(stmt.body)
            self.break_targets.pop()
            self.continue_targets.pop()
            self.jump_to(step_block)
            self.start_block(step_block)
            if stmt.step is not None:
                self.lower_expr(stmt.step)
            self.jump_to(header)
            self.start_block(exit_block)
        elif isinstance(stmt, Switch):
            self.lower_switch(stmt)
        elif isinstance(stmt, Return):
            operands = [] if stmt.value is None else [self.lower_expr(stmt.value)]
            self.emit(Instruction(RETURN_OP, operands, span=stmt.span))
            self.close_block()
        elif isinstance(stmt, Break):
            if not self.break_targets:
                raise SubsetError(ErrorKind.PARSE_ERROR, "break outside loop or switch", stmt.span)
            self.jump_to(self.break_targets[-1])
        elif isinstance(stmt, Continue):
            if not self.continue_targets:
                raise SubsetError(ErrorKind.PARSE_ERROR, "continue outside loop", stmt.span)
            self.jump_to(self.continue_targets[-1])
        else:
            raise SubsetError(ErrorKind.PARSE_ERROR, f"cannot lower statement {type(stmt).__name__}")

    def decl_slot(self, stmt: DeclStmt, decl) -> str:
        # classify_identifiers never sees the declarator itself, so rebuild
        # the symbol the same way: the lexically next use resolves to it. We
        # track a parallel map from (object identity) to symbol.
        if not hasattr(self, "_decl_symbols"):
            self._decl_symbols: Dict[int, str] = {}
            self._collect_decl_symbols(self.ast.body, [dict()])
        return self._decl_symbols[id(decl)]

    def _collect_decl_symbols(self, stmt, scopes, counter=None):
        # Mirrors the scope walk in classify_identifiers so declarators map
        # to the same symbol a Name use resolves to.
        if counter is None:
            counter = [0]
        if isinstance(stmt, DeclStmt):
            for decl in stmt.declarators:
                counter[0] += 1
                symbol = f"{decl.name}#{counter[0]}"
                scopes[-1][decl.name] = symbol
                self._decl_symbols[id(decl)] = f"local:{symbol}"
            return
        if isinstance(stmt, Block):
            scopes.append({})
            for item in stmt.items:
                self._collect_decl_symbols(item, scopes, counter)
            scopes.pop()
            return
        if isinstance(stmt, For) and isinstance(stmt.init, DeclStmt):
            scopes.append({})
            self._collect_decl_symbols(stmt.init, scopes, counter)
            self._collect_decl_symbols(stmt.body, scopes, counter)
            scopes.pop()
            return
        for sub in cfront._stmt_children(stmt):
            self._collect_decl_symbols(sub, scopes, counter)

    def lower_switch(self, stmt: Switch):
        """Desugar switch into an if-else chain over the discriminant.

        Comparisons run in case order. Fall-through is handled goto-free by
        duplicating the shared tail: taking case i executes the statements of
        cases i..N until a break.
        """
        disc = self.lower_expr(stmt.value)
        disc_slot = f"local:__switch#{len(self.cfg.blocks)}"
        self.write_slot(disc_slot, disc)
        exit_block = self.cfg.new_block()
        default_index: Optional[int] = None
        for i, case in enumerate(stmt.cases):
            if case.is_default:
                default_index = i

        chain_tail: Optional[BasicBlock] = None
        for i, case in enumerate(stmt.cases):
            if not case.values:
                continue  # pure default; handled as the chain's else arm
            for value_expr in case.values:
                body_block = self.cfg.new_block()
                next_test = self.cfg.new_block()
                const = self.lower_expr(value_expr)
                cmp = self.emit(Instruction("==", [self.read_slot(disc_slot), const],
                                            span=case.span))
                self.emit(Instruction(BRANCH_OP, [cmp]))
                add_edge(self.block, body_block, "true")
                add_edge(self.block, next_test, "false")
                self.close_block()
                self.start_block(body_block)
                self.lower_case_tail(stmt, i, exit_block)
                self.start_block(next_test)
        if default_index is not None:
            self.lower_case_tail(stmt, default_index, exit_block)
        self.jump_to(exit_block)
        self.start_block(exit_block)

    def lower_case_tail(self, stmt: Switch, start: int, exit_block: BasicBlock):
        self.break_targets.append(exit_block)
        for case in stmt.cases[start:]:
            for s in case.body:
                self.lower_stmt(s)
            if not self.reachable():
                break
        self.break_targets.pop()
        self.jump_to(exit_block)


####################
#     Cleanup      #
####################


def _cleanup(cfg: Cfg):
    """Prune unreachable blocks, splice empty forwarders, merge straight-line
    chains, and renumber blocks in reverse post-order.

    The merge step is what makes `for` and its `while` desugaring produce
    identical graphs up to block naming.
    """
    _prune_unreachable(cfg)
    changed = True
    while changed:
        changed = _splice_empty_forwarders(cfg)
        changed = _merge_chains(cfg) or changed
        if changed:
            _prune_unreachable(cfg)
    _order_blocks_rpo(cfg)


def _prune_unreachable(cfg: Cfg):
    seen: Set[BasicBlock] = set()
    stack = [cfg.entry]
    while stack:
        block = stack.pop()
        if block in seen:
            continue
        seen.add(block)
        for succ, _ in block.succs:
            stack.append(succ)
    cfg.blocks = [b for b in cfg.blocks if b in seen]
    for block in cfg.blocks:
        block.preds = [p for p in block.preds if p in seen]


def _splice_empty_forwarders(cfg: Cfg) -> bool:
    changed = False
    for block in list(cfg.blocks):
        if block is cfg.entry or block.instructions:
            continue
        if len(block.succs) != 1:
            continue
        target, label = block.succs[0]
        assert label is None, "an empty block cannot end in a branch"
        if target is block:
            continue
        for pred in list(block.preds):
            pred.succs = [(target, l) if s is block else (s, l) for s, l in pred.succs]
            target.preds.append(pred)
        target.preds = [p for p in target.preds if p is not block]
        block.preds = []
        block.succs = []
        changed = True
    if changed:
        _prune_unreachable(cfg)
    return changed


def _merge_chains(cfg: Cfg) -> bool:
    changed = False
    for block in list(cfg.blocks):
        if block not in cfg.blocks:
            continue
        while (len(block.succs) == 1 and block.succs[0][0] is not block
               and len(block.succs[0][0].preds) == 1
               and block.succs[0][0] is not cfg.entry
               and block.terminator() is None):
            target = block.succs[0][0]
            block.instructions.extend(target.instructions)
            block.succs = list(target.succs)
            for succ, _ in target.succs:
                succ.preds = [block if p is target else p for p in succ.preds]
            target.succs = []
            target.preds = []
            cfg.blocks.remove(target)
            changed = True
    return changed


def _order_blocks_rpo(cfg: Cfg):
    cfg.blocks = postorder(cfg.entry)[::-1]
    for i, block in enumerate(cfg.blocks):
        block.id = i


def postorder(entry: BasicBlock) -> List[BasicBlock]:
    """Iterative depth-first postorder, visiting true edges first."""
    order: List[BasicBlock] = []
    seen: Set[BasicBlock] = {entry}
    stack: List[Tuple[BasicBlock, int]] = [(entry, 0)]
    while stack:
        block, idx = stack.pop()
        succs = _ordered_succs(block)
        while idx < len(succs) and succs[idx] in seen:
            idx += 1
        if idx < len(succs):
            stack.append((block, idx + 1))
            seen.add(succs[idx])
            stack.append((succs[idx], 0))
        else:
            order.append(block)
    return order


def _ordered_succs(block: BasicBlock) -> List[BasicBlock]:
    # The true successor is the "left branch": it must receive the smaller
    # reverse-post-order index, which means the DFS visits it last.
    labeled = sorted(block.succs, key=lambda e: {"false": 0, "true": 1, None: 2}[e[1]])
    return [s for s, _ in labeled]


####################
#  Normalization   #
####################


def normalize(cfg: Cfg) -> Cfg:
    """Canonicalize commutative operations with one literal operand.

    `1 + i` becomes `i + 1`; two-variable and non-commutative operations are
    left untouched, and no comparison flipping is performed.
    """
    for instr in cfg.instructions():
        if instr.op in COMMUTATIVE and len(instr.operands) == 2:
            a, b = instr.operands
            if isinstance(a, Constant) and not isinstance(b, Constant):
                instr.operands = [b, a]
    return cfg
