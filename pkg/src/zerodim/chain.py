"""delta-chain graphs, chain components and cyclic decompositions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .space import as_scalar, format_scalar
from .systems import SystemLevel

EXISTENTIAL = "existential"
UNIVERSAL = "universal"


@dataclass(frozen=True)
class ChainGraph:
    delta: Fraction | None
    mode: str
    adjacency: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.adjacency)

    def edges(self):
        for a, outs in enumerate(self.adjacency):
            for b in outs:
                yield a, b

    def has_edge(self, a: int, b: int) -> bool:
        return b in self._sets()[a]

    def _sets(self):
        cached = getattr(self, "_adj_sets", None)
        if cached is None:
            cached = tuple(frozenset(o) for o in self.adjacency)
            object.__setattr__(self, "_adj_sets", cached)
        return cached

    def masks(self) -> tuple[int, ...]:
        cached = getattr(self, "_masks", None)
        if cached is None:
            cached = tuple(sum(1 << b for b in outs) for outs in self.adjacency)
            object.__setattr__(self, "_masks", cached)
        return cached

    def to_json(self) -> dict:
        return {"delta": None if self.delta is None else format_scalar(self.delta),
                "mode": self.mode, "edges": [list(o) for o in self.adjacency]}


def build_chain_graph(sys: SystemLevel, delta, mode: str = EXISTENTIAL) -> ChainGraph:
    """A -> B iff dmin(pi A, B) <= delta (existential) or dmax(pi A, B) <= delta (universal)."""
    delta = as_scalar(delta)
    if mode not in (EXISTENTIAL, UNIVERSAL):
        raise ValueError(f"unknown mode {mode!r}")
    model = sys.model
    key = ("graph", sys.pi, delta, mode)
    cached = model._cache.get(key)
    if cached is not None:
        return cached
    which = 0 if mode == EXISTENTIAL else 1
    adj = []
    for a in range(sys.n):
        img = sys.pi[a]
        adj.append(tuple(b for b in range(sys.n) if model._pair(img, b)[which] <= delta))
    graph = model._cache[key] = ChainGraph(delta, mode, tuple(adj))
    return graph


def graph_from_edges(n: int, edges, delta=None, mode: str = EXISTENTIAL) -> ChainGraph:
    adj = [set() for _ in range(n)]
    for a, b in edges:
        adj[a].add(b)
    return ChainGraph(delta, mode, tuple(tuple(sorted(s)) for s in adj))


def strongly_connected_components(graph: ChainGraph) -> list[list[int]]:
    """Iterative Tarjan; components sorted internally and by lowest member."""
    n = graph.n
    index = [None] * n
    low = [0] * n
    on_stack = [False] * n
    stack, out = [], []
    counter = 0
    for root in range(n):
        if index[root] is not None:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            outs = graph.adjacency[v]
            if i < len(outs):
                work[-1] = (v, i + 1)
                w = outs[i]
                if index[w] is None:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return sorted(out)


def _has_cycle(graph: ChainGraph, comp: Sequence[int]) -> bool:
    return len(comp) > 1 or graph.has_edge(comp[0], comp[0])


def chain_recurrent_atoms(graph: ChainGraph) -> list[int]:
    return sorted(a for comp in strongly_connected_components(graph)
                  if _has_cycle(graph, comp) for a in comp)


def chain_components(graph: ChainGraph) -> list[list[int]]:
    return [c for c in strongly_connected_components(graph) if _has_cycle(graph, c)]


@dataclass(frozen=True)
class Component:
    atoms: tuple[int, ...]
    period: int
    parts: tuple[tuple[int, ...], ...]

    def part_of(self) -> dict[int, int]:
        return {a: j for j, part in enumerate(self.parts) for a in part}

    def to_json(self) -> dict:
        return {"atoms": list(self.atoms), "period": self.period,
                "parts": [list(p) for p in self.parts]}


@dataclass(frozen=True)
class CyclicDecomposition:
    delta: Fraction | None
    components: tuple[Component, ...]

    def parts(self):
        for i, comp in enumerate(self.components):
            for j, part in enumerate(comp.parts):
                yield i, j, part

    def label_map(self) -> dict[int, tuple[int, int]]:
        return {a: (i, j) for i, j, part in self.parts() for a in part}

    def to_json(self) -> dict:
        return {"delta": None if self.delta is None else format_scalar(self.delta),
                "components": [c.to_json() for c in self.components]}


def cyclic_decomposition(graph: ChainGraph, component: Sequence[int]) -> Component:
    """Graph period by BFS potentials; parts are potential classes mod m."""
    members = sorted(component)
    inside = set(members)
    if not _has_cycle(graph, members):
        raise ValueError("component carries no cycle")
    root = members[0]
    pot = {root: 0}
    queue = [root]
    for v in queue:
        for w in graph.adjacency[v]:
            if w in inside and w not in pot:
                pot[w] = pot[v] + 1
                queue.append(w)
    if len(pot) != len(members):
        raise ValueError("component is not strongly connected")
    m = 0
    for v in members:
        for w in graph.adjacency[v]:
            if w in inside:
                m = math.gcd(m, abs(pot[v] + 1 - pot[w]))
    parts = [[] for _ in range(m)]
    for v in members:
        parts[pot[v] % m].append(v)
    return Component(tuple(members), m, tuple(tuple(p) for p in parts))


def decompose(sys_or_graph, delta=None, mode: str = EXISTENTIAL) -> CyclicDecomposition:
    graph = sys_or_graph
    if isinstance(sys_or_graph, SystemLevel):
        graph = build_chain_graph(sys_or_graph, delta, mode)
    comps = tuple(cyclic_decomposition(graph, c) for c in chain_components(graph))
    return CyclicDecomposition(graph.delta, comps)


@dataclass
class CyclicReport:
    d1: bool = True
    d2: bool = True
    d3: bool = True
    violations: list[str] = field(default_factory=list)
    d3_exponents: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.d1 and self.d2 and self.d3

    def to_json(self) -> dict:
        return {"D1": self.d1, "D2": self.d2, "D3": self.d3,
                "violations": self.violations, "d3_exponents": self.d3_exponents}


def _bool_matmul(a: list[int], b: list[int]) -> list[int]:
    out = []
    for row in a:
        acc = 0
        r = row
        k = 0
        while r:
            if r & 1:
                acc |= b[k]
            r >>= 1
            k += 1
        out.append(acc)
    return out


def _power_masks(graph: ChainGraph, members: Sequence[int], exponent: int) -> dict[int, int]:
    """Reachability in exactly ``exponent`` steps inside the component (global bit ids)."""
    inside = sum(1 << a for a in members)
    base = [0] * graph.n
    for a in members:
        base[a] = graph.masks()[a] & inside
    result = [(1 << a) if a in set(members) else 0 for a in range(graph.n)]
    power = base
    e = exponent
    while e:
        if e & 1:
            result = _bool_matmul(result, power)
        e >>= 1
        if e:
            power = _bool_matmul(power, power)
    return {a: result[a] for a in members}


def verify_cyclic_properties(decomp, graph: ChainGraph, sys: SystemLevel | None = None) -> CyclicReport:
    """D1 (parts partition the component), D2 (advance), D3 (chains of every large length mN)."""
    report = CyclicReport()
    comps = decomp.components if isinstance(decomp, CyclicDecomposition) else (decomp,)
    for ci, comp in enumerate(comps):
        flat = [a for part in comp.parts for a in part]
        if sorted(flat) != sorted(comp.atoms) or len(flat) != len(set(flat)) or len(comp.parts) != comp.period:
            report.d1 = False
            report.violations.append(f"D1: component {ci} parts do not partition it")
            continue
        where = comp.part_of()
        inside = set(comp.atoms)
        m = comp.period
        for j, part in enumerate(comp.parts):
            for a in part:
                if sys is not None and where.get(sys.pi[a]) != (j + 1) % m:
                    report.d2 = False
                    report.violations.append(f"D2: component {ci}: pi({a}) leaves part {(j + 1) % m}")
                for b in graph.adjacency[a]:
                    if b in inside and where[b] != (j + 1) % m:
                        report.d2 = False
                        report.violations.append(f"D2: component {ci}: edge {a}->{b} skips parts")
        if not report.d2:
            continue
        # D3: M^m restricted to each part must become all-positive (Wielandt bound)
        for j, part in enumerate(comp.parts):
            s = len(part)
            bound = (s - 1) ** 2 + 1
            want = sum(1 << a for a in part)
            step = _power_masks(graph, comp.atoms, m)
            current = {a: 1 << a for a in part}
            found = None
            for N in range(1, bound + 1):
                current = {a: _apply(step, current[a]) for a in part}
                if all(current[a] & want == want for a in part):
                    found = N
                    break
            if found is None:
                report.d3 = False
                report.violations.append(f"D3: component {ci} part {j} not primitive within {bound}")
            else:
                report.d3_exponents.append(found)
    return report


def _apply(step: dict[int, int], mask: int) -> int:
    out = 0
    for a, reach in step.items():
        if mask >> a & 1:
            out |= reach
    return out


def part_diameter(model, part: Sequence[int]) -> Fraction:
    return max(model.dmax(a, b) for i, a in enumerate(part) for b in part[i:])


def r_delta(sys: SystemLevel, delta) -> Fraction:
    """Max dmax-diameter over the cyclic parts of the existential delta-graph."""
    decomp = decompose(sys, delta)
    return max((part_diameter(sys.model, part) for _, _, part in decomp.parts()), default=Fraction(0))
