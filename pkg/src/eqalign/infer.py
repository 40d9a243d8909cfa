"""Worklist inference over the lemma index, with proof-graph construction,
loop-assumption revocation, and cascading retraction.

The monotone phase seeds the worklist with base cases and unconditional
lemmas, then fires lemmas as their conditions prove until quiescence. When
loops are being proven fully (not partial-loop mode), every loop-assumption
edge is then revoked; any conclusion whose position support drops below its
requirement is retracted, along with everything downstream that loses
support in the cascade. Nothing is added after revocation begins, so the
proven set is the least fixpoint of the lemma rules and is independent of
worklist order.
"""

from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Set

from .lemmas import (TAG_LOOP_ASSUMPTION, TRUE, BaseCases, Lemma, LemmaIndex,
                     Proposition)


@dataclass(frozen=True)
class AlignOptions:
    partial_loop: bool = False
    use_control_deps: bool = True

    def to_json(self) -> dict:
        return {"partial_loop": self.partial_loop,
                "use_control_deps": self.use_control_deps}


class Edge:
    """An applied lemma: condition node (or unconditional) to conclusion."""

    __slots__ = ("condition", "conclusion", "position", "tag")

    def __init__(self, condition: Optional[Proposition], conclusion: Proposition,
                 position: int, tag: str):
        self.condition = condition  # None for unconditional lemmas
        self.conclusion = conclusion
        self.position = position
        self.tag = tag

    def __repr__(self):
        cond = "true" if self.condition is None else repr(self.condition)
        return f"{cond} ->[{self.tag}@{self.position}] {self.conclusion!r}"


class Node:
    __slots__ = ("prop", "n", "support", "proven", "retracted", "ground")

    def __init__(self, prop: Proposition, n: int, ground: bool = False):
        self.prop = prop
        self.n = n
        # One bucket of in-edges per dependency position; the node is proven
        # while every bucket is nonempty (or it is ground truth).
        self.support: List[List[Edge]] = [[] for _ in range(n)]
        self.proven = ground
        self.retracted = False
        self.ground = ground

    def covered(self) -> int:
        return sum(1 for bucket in self.support if bucket)

    def fully_supported(self) -> bool:
        return all(self.support)

    def __repr__(self):
        state = "ground" if self.ground else ("proven" if self.proven else "open")
        return f"Node({self.prop!r}, {self.covered()}/{self.n}, {state})"


class ProofGraph:
    """Proven propositions connected by the lemmas that proved them."""

    def __init__(self, base: BaseCases):
        self.nodes: Dict[Proposition, Node] = {}
        self.out_edges: Dict[Proposition, List[Edge]] = {}
        self.assumption_edges: List[Edge] = []
        self.retracted: Set[Proposition] = set()
        for prop in base:
            if prop not in self.nodes:
                self.nodes[prop] = Node(prop, 0, ground=True)

    def node(self, prop: Proposition, n: int) -> Node:
        existing = self.nodes.get(prop)
        if existing is None:
            existing = Node(prop, n)
            self.nodes[prop] = existing
        return existing

    def add_edge(self, lemma: Lemma) -> bool:
        """Apply a lemma whose condition is proven. Returns True when the
        conclusion transitions to proven."""
        node = self.node(lemma.conclusion, lemma.n)
        condition = None if lemma.condition is TRUE else lemma.condition
        edge = Edge(condition, lemma.conclusion, lemma.position, lemma.tag)
        node.support[lemma.position].append(edge)
        if condition is not None:
            self.out_edges.setdefault(condition, []).append(edge)
        if lemma.tag == TAG_LOOP_ASSUMPTION:
            self.assumption_edges.append(edge)
        if not node.proven and node.fully_supported():
            node.proven = True
            return True
        return False

    def proven_props(self) -> List[Proposition]:
        return [prop for prop, node in self.nodes.items() if node.proven]

    def proven_instruction_pairs(self) -> List[Proposition]:
        return [p for p in self.proven_props() if p.is_instruction_pair()]

    def is_proven(self, prop: Proposition) -> bool:
        node = self.nodes.get(prop)
        return node is not None and node.proven

    def position_tags(self, prop: Proposition) -> List[Set[str]]:
        """The lemma tags currently supporting each position of a node."""
        node = self.nodes[prop]
        return [{edge.tag for edge in bucket} for bucket in node.support]

    def to_json(self) -> dict:
        def ref(prop: Proposition) -> dict:
            return {"left": repr(prop.left), "right": repr(prop.right)}

        nodes = []
        for prop, node in self.nodes.items():
            nodes.append({
                "prop": ref(prop),
                "n": node.n,
                "covered": node.covered(),
                "proven": node.proven,
                "ground": node.ground,
            })
        edges = []
        for bucket_owner in self.nodes.values():
            for bucket in bucket_owner.support:
                for edge in bucket:
                    edges.append({
                        "condition": None if edge.condition is None else ref(edge.condition),
                        "conclusion": ref(edge.conclusion),
                        "position": edge.position,
                        "tag": edge.tag,
                    })
        return {
            "nodes": nodes,
            "edges": edges,
            "retracted": [ref(p) for p in self.retracted],
        }


def run_inference(index: LemmaIndex, base: BaseCases,
                  options: Optional[AlignOptions] = None,
                  worklist_order: str = "fifo") -> ProofGraph:
    """Run the proof to quiescence and, in full-loop mode, revoke assumptions.

    :param index: lemma index for the pair.
    :param base: ground-truth propositions.
    :param options: alignment options; partial_loop keeps assumption edges.
    :param worklist_order: 'fifo' or 'lifo'; the proven set is identical
        either way (asserted by tests), the knob exists to demonstrate it.
    """
    if options is None:
        options = AlignOptions()
    graph = ProofGraph(base)
    worklist: deque = deque()
    queued: Set[Proposition] = set()

    def enqueue(prop: Proposition):
        if prop not in queued:
            queued.add(prop)
            worklist.append(prop)

    for prop in base:
        enqueue(prop)
    for lemma in index.true_lemmas:
        if graph.add_edge(lemma):
            enqueue(lemma.conclusion)
    for lemma in index.assumption_lemmas:
        if graph.add_edge(lemma):
            enqueue(lemma.conclusion)

    fired: Set[Proposition] = set()
    while worklist:
        condition = worklist.popleft() if worklist_order == "fifo" else worklist.pop()
        if condition in fired:
            continue
        fired.add(condition)
        for lemma in index.lookup(condition):
            if graph.add_edge(lemma):
                enqueue(lemma.conclusion)

    if not options.partial_loop:
        _revoke_assumptions(graph)
    return graph


def _revoke_assumptions(graph: ProofGraph):
    """Remove every loop-assumption edge, then retract what lost support.

    A node survives when its assumed position was re-proven by the matching
    back-dependency lemma; retraction cascades through out-edges, which also
    invalidates any other loop proof that depended on the retracted node.
    """
    dropped: List[Proposition] = []
    for edge in graph.assumption_edges:
        node = graph.nodes.get(edge.conclusion)
        if node is None:
            continue
        bucket = node.support[edge.position]
        if edge in bucket:
            bucket.remove(edge)
        if node.proven and not node.fully_supported():
            dropped.append(node.prop)
    graph.assumption_edges = []
    for prop in dropped:
        node = graph.nodes[prop]
        if node.proven and not node.fully_supported():
            retract(graph, prop)


def retract(graph: ProofGraph, prop: Proposition) -> ProofGraph:
    """Retract a no-longer-supported proposition and cascade forward.

    Every edge the retracted node justified is removed from its conclusion;
    conclusions that still meet their full requirement through other edges
    survive, everything else retracts in turn.
    """
    queue = [prop]
    while queue:
        current = queue.pop()
        node = graph.nodes.get(current)
        if node is None or node.retracted or node.ground:
            continue
        node.retracted = True
        node.proven = False
        graph.retracted.add(current)
        for edge in graph.out_edges.pop(current, []):
            target = graph.nodes.get(edge.conclusion)
            if target is None or target.retracted:
                continue
            bucket = target.support[edge.position]
            if edge in bucket:
                bucket.remove(edge)
            if target.proven and not target.fully_supported():
                queue.append(edge.conclusion)
    return graph
