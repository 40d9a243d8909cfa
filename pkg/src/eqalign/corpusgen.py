"""Seeded generator of small C functions and function pairs with known
relationships, used to drive the differential and invariant test suites.

Generated programs stay inside the interpreter oracle's comfortable subset:
integer parameters and locals, bounded counter loops (every loop counter is
fresh and never reassigned inside its loop, so termination is guaranteed),
division only by nonzero literals, and no pointers or address-taking.
Side effects are limited to printf with a string literal.

Pair kinds:
  equivalent  - identical text, consistent renaming, desugaring variants,
                or reordering of independent declarations
  mutated     - one injected statement assigning `mut` differs between the
                sides (operand swap, operator swap, or constant change); the
                mutated instruction pair must never align
  unrelated   - two independently generated programs
"""

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple

MUTATION_KINDS = ("rename", "reorder-independent-stmts", "desugar-variant",
                  "operand-swap", "operator-swap", "constant-change")

_BIN_OPS = ("+", "-", "*", "&", "|", "^")
_CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")


@dataclass
class GenConfig:
    seed: int = 0
    max_stmts: int = 12
    min_stmts: int = 3
    loop_depth: int = 2
    param_count: Optional[int] = None  # None: 1 or 2, chosen by the rng
    mutations: Sequence[str] = MUTATION_KINDS
    allow_calls: bool = True


@dataclass
class PairLabel:
    kind: str  # 'equivalent' | 'mutated' | 'unrelated'
    detail: str
    mutated_var: Optional[str] = None


@dataclass
class GProgram:
    params: List[str]
    stmts: List[tuple]


####################
#    Generation    #
####################


class _Gen:
    def __init__(self, rng: random.Random, config: GenConfig, tag: str = "m"):
        self.rng = rng
        self.config = config
        self.tag = tag
        self.var_count = 0
        self.loop_count = 0
        self.print_count = 0

    def program(self) -> GProgram:
        rng = self.rng
        param_count = self.config.param_count or rng.choice((1, 2, 2))
        params = [f"p{i}" for i in range(param_count)]
        available = list(params)
        low = max(1, self.config.min_stmts)
        budget = rng.randint(low, max(low, self.config.max_stmts))
        stmts = self.stmt_list(available, budget, self.config.loop_depth,
                               protected=set())
        stmts.append(("ret", self.expr(available, 2)))
        return GProgram(params, stmts)

    def stmt_list(self, available: List[str], budget: int, loop_depth: int,
                  protected: Set[str]) -> List[tuple]:
        stmts: List[tuple] = []
        while budget > 0:
            roll = self.rng.random()
            if roll < 0.45 or len(available) < 2:
                stmts.append(self.decl(available))
                budget -= 1
            elif roll < 0.62:
                target = self.pick_target(available, protected)
                if target is None:
                    stmts.append(self.decl(available))
                    budget -= 1
                    continue
                kind = self.rng.random()
                if kind < 0.4:
                    stmts.append(("assign", target, self.expr(available, 2)))
                elif kind < 0.8:
                    stmts.append(("aug", target, self.rng.choice(("+", "-", "*")),
                                  self.expr(available, 1)))
                else:
                    stmts.append(("inc", target, self.rng.choice(("+", "-"))))
                budget -= 1
            elif roll < 0.78:
                cost = min(budget, self.rng.randint(2, 4))
                then_budget = max(1, cost - 1)
                els_budget = self.rng.choice((0, 0, max(0, cost - then_budget - 1)))
                cond = self.cond(available)
                then = self.stmt_list(list(available), then_budget, loop_depth, protected)
                els = (self.stmt_list(list(available), els_budget, loop_depth, protected)
                       if els_budget else [])
                stmts.append(("if", cond, then, els))
                budget -= cost
            elif roll < 0.92 and loop_depth > 0:
                cost = min(budget, self.rng.randint(3, 5))
                counter = f"c{self.loop_count}"
                self.loop_count += 1
                bound = self.rng.randint(1, 4)
                inner_available = available + [counter]
                body = self.stmt_list(inner_available, max(1, cost - 2),
                                      loop_depth - 1, protected | {counter})
                stmts.append(("loop", counter, bound, body))
                budget -= cost
            else:
                if self.config.allow_calls:
                    self.print_count += 1
                    stmts.append(("print", f"{self.tag}{self.print_count}"))
                budget -= 1
        return stmts

    def decl(self, available: List[str]) -> tuple:
        name = f"v{self.var_count}"
        self.var_count += 1
        stmt = ("decl", name, self.expr(available, 2))
        available.append(name)
        return stmt

    def pick_target(self, available: List[str], protected: Set[str]) -> Optional[str]:
        candidates = [v for v in available if v not in protected]
        return self.rng.choice(candidates) if candidates else None

    def expr(self, available: List[str], depth: int) -> tuple:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.35:
            if available and rng.random() < 0.7:
                return ("var", rng.choice(available))
            return ("const", rng.randint(-3, 5))
        roll = rng.random()
        if roll < 0.8:
            op = rng.choice(_BIN_OPS)
            return ("bin", op, self.expr(available, depth - 1),
                    self.expr(available, depth - 1))
        if roll < 0.9:
            # Division and remainder only by a nonzero literal.
            op = rng.choice(("/", "%"))
            divisor = rng.choice((1, 2, 3, -2))
            return ("bin", op, self.expr(available, depth - 1), ("const", divisor))
        return ("neg", self.expr(available, depth - 1))

    def cond(self, available: List[str]) -> tuple:
        rng = self.rng
        if available and rng.random() < 0.25:
            return ("truthy", rng.choice(available))
        op = rng.choice(_CMP_OPS)
        return ("cmp", op, self.expr(available, 1), self.expr(available, 1))


####################
#    Rendering     #
####################


class _Style:
    """Semantics-preserving rendering choices, drawn from a separate rng."""

    def __init__(self, rng: Optional[random.Random]):
        self.rng = rng

    def pick(self, *options):
        if self.rng is None:
            return options[0]
        return self.rng.choice(options)


def render(prog: GProgram, name: str, rename: Optional[Dict[str, str]] = None,
           style_rng: Optional[random.Random] = None) -> str:
    rename = rename or {}
    style = _Style(style_rng)

    def nm(var: str) -> str:
        return rename.get(var, var)

    def expr(e) -> str:
        kind = e[0]
        if kind == "var":
            return nm(e[1])
        if kind == "const":
            return str(e[1]) if e[1] >= 0 else f"({e[1]})"
        if kind == "neg":
            return f"-({expr(e[1])})"
        _, op, left, right = e
        # Flipping the constant to the front is only alignment-neutral when
        # the other side is a real variable (a negated literal folds back
        # into a constant, and two-constant operand order is significant).
        if op in ("+", "*") and right[0] == "const" and left[0] == "var":
            if style.pick(False, True):
                left, right = right, left
        return f"({expr(left)} {op} {expr(right)})"

    def cond(c) -> str:
        if c[0] == "truthy":
            base = nm(c[1])
            return style.pick(base, f"{base} != 0")
        _, op, left, right = c
        return f"{expr(left)} {op} {expr(right)}"

    lines: List[str] = []

    def emit(depth: int, text: str):
        lines.append("    " * depth + text)

    def stmt(s, depth: int):
        kind = s[0]
        if kind == "decl":
            emit(depth, f"int {nm(s[1])} = {expr(s[2])};")
        elif kind == "assign":
            emit(depth, f"{nm(s[1])} = {expr(s[2])};")
        elif kind == "aug":
            _, var, op, e = s
            form = style.pick("aug", "plain")
            if form == "aug":
                emit(depth, f"{nm(var)} {op}= {expr(e)};")
            else:
                emit(depth, f"{nm(var)} = {nm(var)} {op} ({expr(e)});")
        elif kind == "inc":
            _, var, op = s
            form = style.pick("postfix", "prefix", "aug", "plain")
            v = nm(var)
            if form == "postfix":
                emit(depth, f"{v}{op}{op};")
            elif form == "prefix":
                emit(depth, f"{op}{op}{v};")
            elif form == "aug":
                emit(depth, f"{v} {op}= 1;")
            else:
                emit(depth, f"{v} = {v} {op} 1;")
        elif kind == "if":
            _, c, then, els = s
            emit(depth, f"if ({cond(c)}) {{")
            for sub in then:
                stmt(sub, depth + 1)
            if els:
                emit(depth, "} else {")
                for sub in els:
                    stmt(sub, depth + 1)
            emit(depth, "}")
        elif kind == "loop":
            _, counter, bound, body = s
            v = nm(counter)
            form = style.pick("for", "while", "for-decl")
            if form == "for-decl":
                emit(depth, f"for (int {v} = 0; {v} < {bound}; {v}++) {{")
            elif form == "for":
                emit(depth, f"int {v};")
                emit(depth, f"for ({v} = 0; {v} < {bound}; {v} = {v} + 1) {{")
            else:
                emit(depth, f"int {v} = 0;")
                emit(depth, f"while ({v} < {bound}) {{")
            for sub in body:
                stmt(sub, depth + 1)
            if form == "while":
                emit(depth, f"    {v} += 1;")
            emit(depth, "}")
        elif kind == "print":
            emit(depth, f'printf("{s[1]}");')
        elif kind == "ret":
            emit(depth, f"return {expr(s[1])};")
        else:
            raise ValueError(f"unknown statement kind {kind}")

    header = ", ".join(f"int {nm(p)}" for p in prog.params) or "void"
    lines.append(f"int {name}({header}) {{")
    for s in prog.stmts:
        stmt(s, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"


####################
#   Pair builder   #
####################


def generate_pair(config: GenConfig) -> Tuple[str, str, PairLabel]:
    """Produce (source_f, source_g, label), deterministic in config.seed."""
    rng = random.Random(config.seed)
    gen = _Gen(rng, config)
    prog = gen.program()

    kinds = ["equivalent-identical", "equivalent-rename", "equivalent-desugar",
             "equivalent-reorder", "mutated-operand-swap", "mutated-operator-swap",
             "mutated-constant-change", "unrelated"]
    choice = kinds[config.seed % len(kinds)]

    if choice == "equivalent-identical":
        src = render(prog, "f")
        return src, src.replace("int f(", "int g(", 1), PairLabel("equivalent", "identical")

    if choice == "equivalent-rename":
        rename = {p: f"arg_{i}" for i, p in enumerate(prog.params)}
        rename.update({f"v{i}": f"val_{i}" for i in range(gen.var_count)})
        rename.update({f"c{i}": f"idx_{i}" for i in range(gen.loop_count)})
        return (render(prog, "f"), render(prog, "g", rename=rename),
                PairLabel("equivalent", "rename"))

    if choice == "equivalent-desugar":
        style_a = random.Random(config.seed * 31 + 1)
        style_b = random.Random(config.seed * 31 + 2)
        return (render(prog, "f", style_rng=style_a),
                render(prog, "g", style_rng=style_b),
                PairLabel("equivalent", "desugar-variant"))

    if choice == "equivalent-reorder":
        reordered = _reorder_independent(prog, rng)
        return (render(prog, "f"), render(reordered, "g"),
                PairLabel("equivalent", "reorder-independent-stmts"))

    if choice.startswith("mutated-"):
        mutation = choice[len("mutated-"):]
        base, mutated = _inject_mutation(prog, rng, mutation)
        return (render(base, "f"), render(mutated, "g"),
                PairLabel("mutated", mutation, mutated_var="mut"))

    other = _Gen(random.Random(config.seed * 7919 + 13), config, tag="u").program()
    return (render(prog, "f"), render(other, "g"), PairLabel("unrelated", "unrelated"))


def _inject_mutation(prog: GProgram, rng: random.Random,
                     mutation: str) -> Tuple[GProgram, GProgram]:
    """Append `int mut = <expr>;` (folded into the return) and perturb it."""
    var = rng.choice(prog.params)
    const = rng.choice((2, 3, 5))
    if mutation == "operand-swap":
        base_expr = ("bin", "-", ("var", var), ("const", const))
        mut_expr = ("bin", "-", ("const", const), ("var", var))
    elif mutation == "operator-swap":
        base_expr = ("bin", "+", ("var", var), ("const", const))
        mut_expr = ("bin", "-", ("var", var), ("const", const))
    else:
        assert mutation == "constant-change"
        base_expr = ("bin", "+", ("var", var), ("const", const))
        mut_expr = ("bin", "+", ("var", var), ("const", const + 2))

    def build(expr) -> GProgram:
        ret = prog.stmts[-1]
        stmts = prog.stmts[:-1] + [
            ("decl", "mut", expr),
            ("ret", ("bin", "+", ret[1], ("var", "mut"))),
        ]
        return GProgram(list(prog.params), stmts)

    return build(base_expr), build(mut_expr)


def _reorder_independent(prog: GProgram, rng: random.Random) -> GProgram:
    """Swap one adjacent pair of independent, effect-free declarations."""
    stmts = list(prog.stmts)
    candidates = []
    for i in range(len(stmts) - 1):
        a, b = stmts[i], stmts[i + 1]
        if a[0] == "decl" and b[0] == "decl" and _independent(a, b):
            candidates.append(i)
    if candidates:
        i = rng.choice(candidates)
        stmts[i], stmts[i + 1] = stmts[i + 1], stmts[i]
    return GProgram(list(prog.params), stmts)


def _independent(a: tuple, b: tuple) -> bool:
    def uses(e, acc):
        if e[0] == "var":
            acc.add(e[1])
        elif e[0] == "neg":
            uses(e[1], acc)
        elif e[0] == "bin":
            uses(e[2], acc)
            uses(e[3], acc)
        return acc

    defs_a, defs_b = {a[1]}, {b[1]}
    uses_a, uses_b = uses(a[2], set()), uses(b[2], set())
    return not (defs_a & (defs_b | uses_b)) and not (defs_b & uses_a)


####################
#   Corpus output  #
####################


def generate_function_source(seed: int, name: str = "fn",
                             max_stmts: int = 20, min_stmts: int = 3,
                             param_count: Optional[int] = None,
                             allow_calls: bool = True) -> str:
    """One standalone function, for self-alignment and benchmark corpora."""
    config = GenConfig(seed=seed, max_stmts=max_stmts, min_stmts=min_stmts,
                       param_count=param_count, allow_calls=allow_calls)
    gen = _Gen(random.Random(seed), config)
    return render(gen.program(), name)


def write_corpus(out_dir: str, seed: int, count: int,
                 max_stmts: int = 12) -> List[dict]:
    """Emit `count` pair files plus a labels.jsonl manifest; returns labels."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = []
    for i in range(count):
        config = GenConfig(seed=seed + i, max_stmts=max_stmts)
        src_f, src_g, label = generate_pair(config)
        file_a = out / f"pair_{i:05d}_a.c"
        file_b = out / f"pair_{i:05d}_b.c"
        file_a.write_text(src_f)
        file_b.write_text(src_g)
        labels.append({
            "id": i,
            "kind": label.kind,
            "detail": label.detail,
            "mutated_var": label.mutated_var,
            "file_a": file_a.name,
            "file_b": file_b.name,
        })
    with open(out / "labels.jsonl", "w") as fh:
        for row in labels:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return labels
