"""End-to-end per-function analysis: parse, classify, lower, SSA, control
dependence, loops. The resulting AnalyzedFn is the input both the lemma
generator and the interpreter oracle consume; it is immutable once built,
so one function can participate in many alignments.
"""

from typing import Dict, List, Optional, Set, Tuple

from . import cfront, deps, ir, ssa
from .cfront import Ast
from .deps import Cdg, DfoIndex, LoopInfo
from .ir import BasicBlock, Cfg, Instruction
from .ssa import DomInfo

InstrDep = Tuple[Instruction, str]  # (controlling branch instruction, label)


class AnalyzedFn:
    def __init__(self, source: str, ast: Ast, cfg: Cfg, dom: DomInfo,
                 cdg: Cdg, dfo: DfoIndex, loops: LoopInfo):
        self.source = source
        self.ast = ast
        self.cfg = cfg
        self.dom = dom
        self.cdg = cdg
        self.dfo = dfo
        self.loops = loops
        self.name = cfg.name
        self.params = cfg.params
        self.instructions: List[Instruction] = cfg.instructions()

        # Every instruction inherits its block's control dependencies, in
        # canonical order, expressed against the controlling branch
        # instruction. A parallel flag records which are back-dependencies.
        self.ctrl_deps: Dict[Instruction, List[InstrDep]] = {}
        self.ctrl_back: Dict[Instruction, List[bool]] = {}
        ordered_by_block: Dict[BasicBlock, List[deps.CtrlDep]] = {}
        for block in cfg.blocks:
            ordered = deps.order_control_deps(cdg, dfo, loops, cdg.deps[block])
            ordered_by_block[block] = ordered
        for block in cfg.blocks:
            dep_instrs = [
                (controller.instructions[-1], label)
                for controller, label in ordered_by_block[block]
            ]
            back_flags = [
                (block, controller) in loops.ctrl_back_deps
                for controller, _ in ordered_by_block[block]
            ]
            for instr in block.instructions:
                self.ctrl_deps[instr] = dep_instrs
                self.ctrl_back[instr] = back_flags

    def phi_back_positions(self, instr: Instruction) -> Set[int]:
        return self.loops.phi_back_operands.get(instr, set())

    def is_loop_header_phi(self, instr: Instruction) -> bool:
        return instr.op == ir.PHI_OP and instr.block in self.loops.headers

    def __repr__(self):
        return f"AnalyzedFn({self.name}, {len(self.instructions)} instructions)"


def analyze_source(source: str, function_name: Optional[str] = None) -> AnalyzedFn:
    """Run the whole front half of the pipeline on one function.

    :param source: C source text.
    :param function_name: required when the source holds several functions.
    :raises SubsetError: for parse failures, excluded features, or
        irreducible control flow.
    """
    ast = cfront.parse_function(source, function_name)
    return analyze_ast(ast, source)


def analyze_ast(ast: Ast, source: str = "") -> AnalyzedFn:
    cfront.classify_identifiers(ast)
    cfg = ir.lower(ast)
    ir.normalize(cfg)
    dom = ssa.compute_dominators(cfg)
    ssa.to_ssa(cfg, dom)
    ssa.copy_propagate(cfg)
    cdg = deps.build_cdg(cfg)
    dfo = deps.compute_dfo(cfg)
    loops = deps.find_loops_and_backdeps(cfg, cdg, dom)
    return AnalyzedFn(source, ast, cfg, dom, cdg, dfo, loops)
