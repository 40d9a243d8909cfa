"""Control dependence, depth-first ordering, natural loops, and
back-dependency identification.

A block A is control dependent on branch block B with label L when taking
B's L edge guarantees A executes and the other edge can bypass it (computed
as the postdominance frontier over a virtual-exit-augmented graph). Self
dependencies are excluded: a branch cannot decide whether it itself already
ran, and loop re-entry is handled by induction instead.

A dependency is a *back*-dependency when the controlling block can only be
reached from the dependent block by walking CFG edges backward through a
loop back-edge; those are the dependencies loop induction assumes.
"""

import functools
from typing import Dict, List, Optional, Set, Tuple

from .ir import PHI_OP, BasicBlock, Cfg, Instruction, postorder
from .cfront import ErrorKind, SubsetError
from .ssa import DomInfo, compute_dominators

CtrlDep = Tuple[BasicBlock, str]  # (controlling block, 'true' | 'false')


class Cdg:
    """Control dependence graph: dependent block -> [(controller, label)].

    Also answers indirect (transitive) dependence queries, i.e. reachability
    along dependence edges.
    """

    def __init__(self, deps: Dict[BasicBlock, List[CtrlDep]]):
        self.deps = deps
        self._reach: Dict[BasicBlock, Set[BasicBlock]] = {}

    def reachable_from(self, block: BasicBlock) -> Set[BasicBlock]:
        if block not in self._reach:
            seen: Set[BasicBlock] = set()
            stack = [b for b, _ in self.deps.get(block, ())]
            while stack:
                current = stack.pop()
                if current in seen:
                    continue
                seen.add(current)
                stack.extend(b for b, _ in self.deps.get(current, ()))
            self._reach[block] = seen
        return self._reach[block]

    def edges(self) -> List[Tuple[BasicBlock, BasicBlock, str]]:
        return [(a, b, label) for a, deps in self.deps.items() for b, label in deps]


class DfoIndex:
    """Depth-first (reverse post-) order of blocks, true-successor first."""

    def __init__(self, index: Dict[BasicBlock, int]):
        self.index = index

    def __getitem__(self, block: BasicBlock) -> int:
        return self.index[block]


class Loop:
    def __init__(self, header: BasicBlock, body: Set[BasicBlock],
                 back_edges: List[Tuple[BasicBlock, BasicBlock]]):
        self.header = header
        self.body = body
        self.back_edges = back_edges

    def __repr__(self):
        return f"Loop(header={self.header}, body={sorted(b.id for b in self.body)})"


class LoopInfo:
    """Natural loops plus both kinds of back-dependency.

    phi_back_operands flags phi operand positions fed along a loop back-edge
    (these always sit at a loop header). ctrl_back_deps flags control
    dependence edges (dependent, controller) that cross a back-edge; those
    may end away from the header.
    """

    def __init__(self, loops: List[Loop],
                 phi_back_operands: Dict[Instruction, Set[int]],
                 ctrl_back_deps: Set[Tuple[BasicBlock, BasicBlock]]):
        self.loops = loops
        self.headers = {loop.header for loop in loops}
        self.back_edges = {edge for loop in loops for edge in loop.back_edges}
        self.phi_back_operands = phi_back_operands
        self.ctrl_back_deps = ctrl_back_deps


def compute_dfo(cfg: Cfg) -> DfoIndex:
    rpo = postorder(cfg.entry)[::-1]
    return DfoIndex({b: i for i, b in enumerate(rpo)})


def build_cdg(cfg: Cfg) -> Cdg:
    """Postdominance-frontier control dependence with a virtual exit.

    Functions whose loops never reach a return get a synthetic exit edge
    from each trapped loop header so postdominance stays defined.
    """
    virtual_exit = BasicBlock(-1)
    succ_map: Dict[BasicBlock, List[BasicBlock]] = {
        b: [s for s, _ in b.succs] for b in cfg.blocks
    }
    succ_map[virtual_exit] = []
    for block in cfg.blocks:
        if not block.succs:
            succ_map[block].append(virtual_exit)

    _ensure_exit_reaches_all(cfg, succ_map, virtual_exit)

    pred_map: Dict[BasicBlock, List[BasicBlock]] = {b: [] for b in succ_map}
    for block, succs in succ_map.items():
        for s in succs:
            pred_map[s].append(block)

    pdom = compute_dominators(cfg, entry=virtual_exit,
                              succs=lambda b: pred_map[b],
                              preds=lambda b: succ_map[b])

    deps: Dict[BasicBlock, List[CtrlDep]] = {b: [] for b in cfg.blocks}
    for controller in cfg.blocks:
        labeled = [(s, label) for s, label in controller.succs if label is not None]
        if not labeled:
            continue
        for succ, label in labeled:
            # Every block on the postdominator-tree path from succ up to (and
            # excluding) pdom(controller) is control dependent on this edge.
            runner: Optional[BasicBlock] = succ
            stop = pdom.idom[controller]
            while runner is not None and runner is not stop and runner is not virtual_exit:
                if runner is not controller:
                    deps[runner].append((controller, label))
                runner = pdom.idom[runner]
    for block in cfg.blocks:
        deps[block].sort(key=lambda d: (d[0].id, d[1]))
    return Cdg(deps)


def _ensure_exit_reaches_all(cfg: Cfg, succ_map, virtual_exit):
    while True:
        reached = _backward_reach(succ_map, virtual_exit)
        trapped = [b for b in cfg.blocks if b not in reached]
        if not trapped:
            return
        headers = _loop_headers(cfg)
        candidates = [b for b in trapped if b in headers] or trapped
        chosen = min(candidates, key=lambda b: b.id)
        succ_map[chosen].append(virtual_exit)


def _backward_reach(succ_map, start) -> Set[BasicBlock]:
    pred_map: Dict[BasicBlock, List[BasicBlock]] = {b: [] for b in succ_map}
    for block, succs in succ_map.items():
        for s in succs:
            pred_map[s].append(block)
    seen = {start}
    stack = [start]
    while stack:
        for p in pred_map[stack.pop()]:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def _loop_headers(cfg: Cfg) -> Set[BasicBlock]:
    dom = compute_dominators(cfg)
    return {
        succ
        for block in cfg.blocks
        for succ, _ in block.succs
        if dom.dominates(succ, block)
    }


def indirectly_depends(cdg: Cdg, a: BasicBlock, c: BasicBlock) -> bool:
    """True when there is a (nonempty) control dependence path from a to c."""
    return c in cdg.reachable_from(a)


def order_control_deps(cdg: Cdg, dfo: DfoIndex, loops: LoopInfo,
                       deps: List[CtrlDep]) -> List[CtrlDep]:
    """Sort one block's control dependencies into their canonical order.

    When neither dependency indirectly depends on the other, or both do
    (a dependence cycle, as loops with breaks produce), the depth-first
    index decides; a forward dependency always carries the smaller index
    than its back-edge partner, so forward dependencies come first. When
    exactly one indirectly depends on the other, the independent one wins.
    """
    if len(deps) <= 1:
        return list(deps)

    def cmp(dep_b: CtrlDep, dep_c: CtrlDep) -> int:
        b, c = dep_b[0], dep_c[0]
        if b is c:
            return -1 if dep_b[1] < dep_c[1] else 1
        b_idep_c = indirectly_depends(cdg, b, c)
        c_idep_b = indirectly_depends(cdg, c, b)
        if b_idep_c == c_idep_b:
            return -1 if dfo[b] < dfo[c] else 1
        if c_idep_b:
            return -1  # b < c
        return 1

    return sorted(deps, key=functools.cmp_to_key(cmp))


def find_loops_and_backdeps(cfg: Cfg, cdg: Cdg, dom: DomInfo) -> LoopInfo:
    """Identify natural loops and flag back-dependencies.

    :raises SubsetError: IRREDUCIBLE_CFG when a retreating edge targets a
        block that does not dominate its source.
    """
    _check_reducible(cfg, dom)

    back_edges_by_header: Dict[BasicBlock, List[Tuple[BasicBlock, BasicBlock]]] = {}
    for block in cfg.blocks:
        for succ, _ in block.succs:
            if dom.dominates(succ, block):
                back_edges_by_header.setdefault(succ, []).append((block, succ))

    loops: List[Loop] = []
    for header in sorted(back_edges_by_header, key=lambda b: b.id):
        edges = back_edges_by_header[header]
        body: Set[BasicBlock] = {header}
        stack = [tail for tail, _ in edges]
        while stack:
            block = stack.pop()
            if block in body:
                continue
            body.add(block)
            stack.extend(block.preds)
        loops.append(Loop(header, body, edges))

    back_edge_set = {edge for loop in loops for edge in loop.back_edges}

    phi_back: Dict[Instruction, Set[int]] = {}
    for loop in loops:
        for instr in loop.header.instructions:
            if instr.op != PHI_OP:
                continue
            positions = {
                i for i, pred in enumerate(instr.phi_preds or [])
                if (pred, loop.header) in back_edge_set
            }
            if positions:
                phi_back[instr] = positions

    # A control dependency (A dep B) is a back-dependency when B cannot be
    # reached from A by walking predecessor edges once back-edges are
    # removed: B's decision only arrives via a previous loop iteration.
    forward_reach_cache: Dict[BasicBlock, Set[BasicBlock]] = {}

    def backward_reach_without_back_edges(start: BasicBlock) -> Set[BasicBlock]:
        if start not in forward_reach_cache:
            seen = {start}
            stack = [start]
            while stack:
                current = stack.pop()
                for pred in current.preds:
                    if (pred, current) in back_edge_set or pred in seen:
                        continue
                    seen.add(pred)
                    stack.append(pred)
            forward_reach_cache[start] = seen
        return forward_reach_cache[start]

    ctrl_back: Set[Tuple[BasicBlock, BasicBlock]] = set()
    for dependent, dep_list in cdg.deps.items():
        for controller, _ in dep_list:
            if controller not in backward_reach_without_back_edges(dependent):
                ctrl_back.add((dependent, controller))

    return LoopInfo(loops, phi_back, ctrl_back)


def _check_reducible(cfg: Cfg, dom: DomInfo):
    state: Dict[BasicBlock, int] = {}  # 0 unseen, 1 on stack, 2 done
    stack: List[Tuple[BasicBlock, int]] = [(cfg.entry, 0)]
    state[cfg.entry] = 1
    while stack:
        block, i = stack.pop()
        succs = [s for s, _ in block.succs]
        advanced = False
        while i < len(succs):
            succ = succs[i]
            i += 1
            if state.get(succ, 0) == 1 and not dom.dominates(succ, block):
                raise SubsetError(ErrorKind.IRREDUCIBLE_CFG,
                                  "irreducible control flow: retreating edge "
                                  f"B{block.id} -> B{succ.id} does not target a dominator")
            if state.get(succ, 0) == 0:
                stack.append((block, i))
                state[succ] = 1
                stack.append((succ, 0))
                advanced = True
                break
        if not advanced:
            state[block] = 2


def graphviz(cfg: Cfg, cdg: Optional[Cdg] = None) -> str:
    """Render the CFG (and optionally the CDG) as a dot graph for debugging."""
    lines = ["digraph fn {", "  node [shape=box];"]
    for block in cfg.blocks:
        body = "\\l".join(repr(i) for i in block.instructions)
        lines.append(f'  B{block.id} [label="B{block.id}\\l{body}\\l"];')
        for succ, label in block.succs:
            attr = f' [label="{label}"]' if label else ""
            lines.append(f"  B{block.id} -> B{succ.id}{attr};")
    if cdg is not None:
        for a, b, label in cdg.edges():
            lines.append(f'  B{a.id} -> B{b.id} [style=dashed, color=red, label="dep {label}"];')
    lines.append("}")
    return "\n".join(lines)
