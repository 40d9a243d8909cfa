"""Dominator analysis, SSA construction, and copy propagation.

After `to_ssa` every variable slot is statically assigned once: operands
refer directly to the defining instruction, parameter, global, constant, or
uninitialized-read value. `copy_propagate` then removes the copy
instructions the lowering emitted for plain assignments, folding each copy
target's source name into the surviving value so variable-name mapping
still works afterward.
"""

from typing import Dict, List, Optional, Set, Tuple

from .ir import (COPY_OP, PHI_OP, BasicBlock, Cfg, GlobalVar, Instruction,
                 Parameter, Value, _SlotRef)


class DomInfo:
    """Immediate dominators, dominance frontiers, and the dominator tree."""

    def __init__(self, idom: Dict[BasicBlock, Optional[BasicBlock]],
                 frontiers: Dict[BasicBlock, List[BasicBlock]],
                 children: Dict[BasicBlock, List[BasicBlock]]):
        self.idom = idom
        self.frontiers = frontiers
        self.children = children

    def dominates(self, a: BasicBlock, b: BasicBlock) -> bool:
        """True when a dominates b (reflexively)."""
        runner: Optional[BasicBlock] = b
        while runner is not None:
            if runner is a:
                return True
            runner = self.idom[runner]
        return False


def compute_dominators(cfg: Cfg, entry: Optional[BasicBlock] = None,
                       reverse: bool = False,
                       succs=None, preds=None) -> DomInfo:
    """Iterative dominator computation (Cooper-Harvey-Kennedy).

    With reverse=True and a virtual exit as `entry`, computes postdominators;
    the deps module uses that for control dependence.
    """
    if entry is None:
        entry = cfg.entry
    if succs is None:
        succs = lambda b: [s for s, _ in b.succs] if not reverse else b.preds
    if preds is None:
        preds = lambda b: b.preds if not reverse else [s for s, _ in b.succs]

    order: List[BasicBlock] = []
    seen: Set[BasicBlock] = {entry}
    stack: List[Tuple[BasicBlock, int]] = [(entry, 0)]
    while stack:
        block, i = stack.pop()
        ss = succs(block)
        while i < len(ss) and ss[i] in seen:
            i += 1
        if i < len(ss):
            stack.append((block, i + 1))
            seen.add(ss[i])
            stack.append((ss[i], 0))
        else:
            order.append(block)
    rpo = order[::-1]
    index = {b: i for i, b in enumerate(rpo)}

    idom: Dict[BasicBlock, Optional[BasicBlock]] = {b: None for b in rpo}
    idom[entry] = entry

    def intersect(a: BasicBlock, b: BasicBlock) -> BasicBlock:
        while a is not b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for block in rpo:
            if block is entry:
                continue
            candidates = [p for p in preds(block) if p in index and idom[p] is not None]
            if not candidates:
                continue
            new_idom = candidates[0]
            for p in candidates[1:]:
                new_idom = intersect(new_idom, p)
            if idom[block] is not new_idom:
                idom[block] = new_idom
                changed = True

    idom[entry] = None

    frontiers: Dict[BasicBlock, List[BasicBlock]] = {b: [] for b in rpo}
    frontier_sets: Dict[BasicBlock, Set[BasicBlock]] = {b: set() for b in rpo}
    for block in rpo:
        unique_preds = [p for p in dict.fromkeys(preds(block)) if p in index]
        if len(unique_preds) >= 2:
            for p in unique_preds:
                runner = p
                while runner is not idom[block] and runner is not None:
                    if block not in frontier_sets[runner]:
                        frontier_sets[runner].add(block)
                        frontiers[runner].append(block)
                    runner = idom[runner]

    children: Dict[BasicBlock, List[BasicBlock]] = {b: [] for b in rpo}
    for block in rpo:
        if idom[block] is not None:
            children[idom[block]].append(block)
    for kids in children.values():
        kids.sort(key=lambda b: index[b])

    return DomInfo(idom, frontiers, children)


####################
#  SSA conversion  #
####################


def to_ssa(cfg: Cfg, dom: DomInfo) -> Cfg:
    """Rewrite slot reads into direct value references, placing phis at
    iterated dominance frontiers.

    Phi operands are kept parallel to a recorded predecessor list and are
    ordered with forward-edge operands before back-edge operands, ties broken
    by the predecessor's depth-first index. A loop-header phi therefore
    always lists its outside-the-loop operand first.
    """
    assert not cfg.in_ssa, "CFG is already in SSA form"

    # Definition sites per slot. The entry block implicitly defines every
    # slot (parameters and globals to their entry values, everything else to
    # an uninitialized read).
    defsites: Dict[str, Set[BasicBlock]] = {}
    slots_in_order: List[str] = []

    def note_slot(slot: str):
        if slot not in defsites:
            defsites[slot] = {cfg.entry}
            slots_in_order.append(slot)

    for block in cfg.blocks:
        for instr in block.instructions:
            for operand in instr.operands:
                if isinstance(operand, _SlotRef):
                    note_slot(operand.slot)
            if instr.op == COPY_OP:
                note_slot(instr.payload)
                defsites[instr.payload].add(block)

    # Phi placement at iterated dominance frontiers.
    phis: Dict[BasicBlock, Dict[str, Instruction]] = {b: {} for b in cfg.blocks}
    for slot in slots_in_order:
        worklist = sorted(defsites[slot], key=lambda b: b.id)
        queued = set(worklist)
        while worklist:
            site = worklist.pop()
            for frontier_block in dom.frontiers[site]:
                if slot not in phis[frontier_block]:
                    phi = Instruction(PHI_OP, [])
                    phi.merge_var = _display_name(slot)
                    phi.phi_preds = []
                    phi.block = frontier_block
                    phis[frontier_block][slot] = phi
                    if frontier_block not in queued:
                        queued.add(frontier_block)
                        worklist.append(frontier_block)

    # Renaming walk over the dominator tree.
    stacks: Dict[str, List[Value]] = {slot: [] for slot in slots_in_order}

    def initial_value(slot: str) -> Value:
        kind, _, sym = slot.partition(":")
        if kind == "param":
            for p in cfg.params:
                if p.name == sym:
                    return p
            return cfg.uninit_value(slot)
        if kind == "global":
            return cfg.global_var(sym)
        return cfg.uninit_value(slot)

    def current(slot: str) -> Value:
        stack = stacks[slot]
        return stack[-1] if stack else initial_value(slot)

    visit_stack: List[Tuple[BasicBlock, bool]] = [(cfg.entry, False)]
    pushed: Dict[BasicBlock, List[str]] = {}
    while visit_stack:
        block, done = visit_stack.pop()
        if done:
            for slot in pushed[block]:
                stacks[slot].pop()
            continue
        pushed[block] = []
        for slot, phi in phis[block].items():
            stacks[slot].append(phi)
            pushed[block].append(slot)
        for instr in block.instructions:
            instr.operands = [
                current(op.slot) if isinstance(op, _SlotRef) else op
                for op in instr.operands
            ]
            if instr.op == COPY_OP:
                stacks[instr.payload].append(instr)
                pushed[block].append(instr.payload)
        for succ, _ in block.succs:
            for slot, phi in phis[succ].items():
                phi.operands.append(current(slot))
                phi.phi_preds.append(block)
        visit_stack.append((block, True))
        for child in reversed(dom.children[block]):
            visit_stack.append((child, False))

    # Install phis at block heads, ordering each phi's operands.
    for block in cfg.blocks:
        block_phis = list(phis[block].values())
        for phi in block_phis:
            _order_phi_operands(phi, block, dom)
        block.instructions = block_phis + block.instructions

    _prune_dead_phis(cfg)
    cfg.in_ssa = True
    cfg.renumber()
    return cfg


def _display_name(slot: str) -> str:
    kind, _, sym = slot.partition(":")
    return sym.split("#")[0] if kind == "local" else sym


def _order_phi_operands(phi: Instruction, block: BasicBlock, dom: DomInfo):
    def key(pair):
        _, pred = pair
        is_back = dom.dominates(block, pred)
        return (1 if is_back else 0, pred.id)

    pairs = sorted(zip(phi.operands, phi.phi_preds), key=key)
    phi.operands = [v for v, _ in pairs]
    phi.phi_preds = [p for _, p in pairs]


def _prune_dead_phis(cfg: Cfg):
    """Drop phis no real instruction uses, even transitively."""
    phi_uses: Dict[Instruction, Set[Instruction]] = {}
    live: Set[Instruction] = set()
    worklist: List[Instruction] = []
    for block in cfg.blocks:
        for instr in block.instructions:
            for operand in instr.operands:
                if isinstance(operand, Instruction) and operand.op == PHI_OP:
                    if instr.op == PHI_OP:
                        phi_uses.setdefault(operand, set()).add(instr)
                    elif operand not in live:
                        live.add(operand)
                        worklist.append(operand)
    # A phi used by a live phi is live too.
    reverse: Dict[Instruction, Set[Instruction]] = {}
    for phi, users in phi_uses.items():
        for user in users:
            reverse.setdefault(user, set()).add(phi)
    while worklist:
        phi = worklist.pop()
        for used in reverse.get(phi, ()):
            if used not in live:
                live.add(used)
                worklist.append(used)
    for block in cfg.blocks:
        block.instructions = [
            i for i in block.instructions if i.op != PHI_OP or i in live
        ]


####################
# Copy propagation #
####################


def copy_propagate(cfg: Cfg) -> Cfg:
    """Remove copy instructions and single-value phis, to a fixpoint.

    The copy target's source-variable names are appended to the surviving
    value's provenance, so `v = a;` leaves {a, v} on the value that remains.
    Phis whose operands all resolve to one value collapse to that value.
    """
    assert cfg.in_ssa, "copy propagation expects SSA form"
    subst: Dict[Instruction, Value] = {}

    def resolve(value: Value) -> Value:
        while isinstance(value, Instruction) and value in subst:
            value = subst[value]
        return value

    def transfer_names(source: Instruction, target: Value):
        if isinstance(target, (Instruction, Parameter, GlobalVar)):
            for name in source.assigned_names:
                if not name.startswith("__") and name not in target.assigned_names:
                    target.assigned_names.append(name)

    changed = True
    while changed:
        changed = False
        for block in cfg.blocks:
            kept: List[Instruction] = []
            for instr in block.instructions:
                if instr.op == COPY_OP:
                    target = resolve(instr.operands[0])
                    subst[instr] = target
                    transfer_names(instr, target)
                    changed = True
                    continue
                if instr.op == PHI_OP:
                    resolved = [resolve(op) for op in instr.operands]
                    distinct = {id(v) for v in resolved if v is not instr}
                    if len(distinct) == 1:
                        target = next(v for v in resolved if v is not instr)
                        subst[instr] = target
                        transfer_names(instr, target)
                        changed = True
                        continue
                kept.append(instr)
            block.instructions = kept
        if changed:
            for block in cfg.blocks:
                for instr in block.instructions:
                    instr.operands = [resolve(op) for op in instr.operands]

    _prune_dead_phis(cfg)
    cfg.renumber()
    return cfg
