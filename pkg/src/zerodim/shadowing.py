"""Sound three-valued shadowing checks at atom level.

Every check runs two passes over finite graphs:

* certification: existential delta-graph (edges wherever *some* points are
  delta-close) with dmax closeness.  If every atom path is tracked, every
  true pseudo-orbit of the underlying space is.
* refutation: universal delta-graph (edges where *all* points are
  delta-close) with dmin closeness.  A path that no atom can follow is a
  true pseudo-orbit that no point shadows.

Anything between the two is reported as inconclusive, never guessed.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .chain import (EXISTENTIAL, UNIVERSAL, ChainGraph, build_chain_graph,
                    chain_components, strongly_connected_components)
from .space import FiniteModel, as_scalar, format_scalar, threshold_grid
from .systems import (PreconditionError, RefinementNeeded, SystemFamily, SystemLevel,
                      extend_family, level_power, refinement_violations)

CERTIFIED = "certified"
REFUTED = "refuted"
INCONCLUSIVE = "inconclusive"

PERIODIC = "periodic"
STRICT = "strict"
PSEUDO = "pseudo"

DEFAULT_STATE_CAP = 2 ** 18


class StateCapExceeded(RuntimeError):
    pass


# --------------------------------------------------------------------------
# bitmask helpers


class MaskMap:
    """Image of an atom bitmask under a permutation, via per-byte tables."""

    def __init__(self, perm: Sequence[int]):
        n = len(perm)
        self.tables = []
        for c in range((n + 7) // 8):
            table = [0] * 256
            for v in range(1, 256):
                low = v & -v
                idx = c * 8 + low.bit_length() - 1
                table[v] = table[v ^ low] | ((1 << perm[idx]) if idx < n else 0)
            self.tables.append(table)

    def __call__(self, mask: int) -> int:
        out = 0
        c = 0
        while mask:
            b = mask & 255
            if b:
                out |= self.tables[c][b]
            mask >>= 8
            c += 1
        return out


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_map(sys: SystemLevel) -> MaskMap:
    key = ("maskmap", sys.pi)
    mm = sys.model._cache.get(key)
    if mm is None:
        mm = sys.model._cache[key] = MaskMap(sys.pi)
    return mm


def closeness_masks(model: FiniteModel, eps: Fraction, which: int) -> tuple[int, ...]:
    """close[B] = {R : bound(R, B) <= eps}; which = 0 for dmin, 1 for dmax."""
    key = ("close", eps, which)
    cached = model._cache.get(key)
    if cached is not None:
        return cached
    n = model.n
    out = []
    for b in range(n):
        mask = 0
        for r in range(n):
            if model._pair(r, b)[which] <= eps:
                mask |= 1 << r
        out.append(mask)
    out = model._cache[key] = tuple(out)
    return out


def _pass_inputs(sys: SystemLevel, eps, delta, certify: bool):
    graph = build_chain_graph(sys, delta, EXISTENTIAL if certify else UNIVERSAL)
    close = closeness_masks(sys.model, eps, 1 if certify else 0)
    return graph, close


def live_nodes(graph: ChainGraph) -> set[int]:
    """Nodes from which an infinite path starts."""
    cyc = set()
    for comp in strongly_connected_components(graph):
        if len(comp) > 1 or graph.has_edge(comp[0], comp[0]):
            cyc.update(comp)
    rev = [[] for _ in range(graph.n)]
    for a, b in graph.edges():
        rev[b].append(a)
    live = set(cyc)
    queue = list(cyc)
    for v in queue:
        for u in rev[v]:
            if u not in live:
                live.add(u)
                queue.append(u)
    return live


def _lasso_tail(graph: ChainGraph, start: int, allowed: set[int]) -> tuple[list[int], list[int]]:
    """Shortest path from ``start`` to a node on a cycle, then a shortest cycle there."""
    on_cycle = set()
    for comp in strongly_connected_components(graph):
        if len(comp) > 1 or graph.has_edge(comp[0], comp[0]):
            on_cycle.update(c for c in comp if c in allowed)
    prev = {start: None}
    queue = deque([start])
    target = None
    while queue:
        v = queue.popleft()
        if v in on_cycle:
            target = v
            break
        for w in graph.adjacency[v]:
            if w in allowed and w not in prev:
                prev[w] = v
                queue.append(w)
    if target is None:
        raise ValueError("no infinite continuation")
    stem = []
    v = target
    while v is not None:
        stem.append(v)
        v = prev[v]
    stem.reverse()
    back = {}
    queue = deque()
    for w in graph.adjacency[target]:
        if w in allowed and w not in back:
            back[w] = target
            queue.append(w)
    while target not in back:
        v = queue.popleft()
        for w in graph.adjacency[v]:
            if w in allowed and w not in back:
                back[w] = v
                queue.append(w)
    cycle = [target]
    v = back[target]
    while v != target:
        cycle.append(v)
        v = back[v]
    cycle.append(target)
    cycle = [cycle[0]] + list(reversed(cycle[1:-1])) + [target]
    return stem, cycle


# --------------------------------------------------------------------------
# verdict types


@dataclass
class ShadowingVerdict:
    kind: str
    epsilon: Fraction
    delta: Fraction
    result: str
    witness: dict | None = None
    certificate: dict | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        doc = {"check": self.kind, "result": self.result,
               "epsilon": format_scalar(self.epsilon), "delta": format_scalar(self.delta)}
        if self.witness is not None:
            doc["witness"] = self.witness
        if self.certificate is not None:
            doc["certificate"] = self.certificate
        if self.notes:
            doc["notes"] = self.notes
        return doc


@dataclass(frozen=True)
class PeriodicShadowCertificate:
    cycle: tuple[int, ...]
    shadow: int
    variant: str
    shadow_orbit: tuple[int, ...]
    periods: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.cycle) - 1

    def to_json(self) -> dict:
        doc = {"cycle": list(self.cycle), "shadow": self.shadow, "variant": self.variant,
               "shadow_orbit": list(self.shadow_orbit), "shadow_min_periods": list(self.periods)}
        if self.variant == STRICT:
            doc["obligation"] = f"some least period of a point in atom {self.shadow} divides {self.length}"
        return doc


# --------------------------------------------------------------------------
# shadowing


def _path_back(parent: dict, state) -> list:
    out = []
    while state is not None:
        out.append(state)
        state = parent[state]
    out.reverse()
    return out


def _subset_search(graph: ChainGraph, close: list[int], shift: MaskMap, starts: Sequence[int],
                   allowed: set[int] | None, cap: int):
    """BFS over (atom, surviving shadows); returns the atom path to an empty set."""
    parent = {}
    queue = deque()
    for a in starts:
        st = (a, close[a])
        if st in parent:
            continue
        parent[st] = None
        if st[1] == 0:
            return [a], len(parent)
        queue.append(st)
    while queue:
        st = queue.popleft()
        a, s = st
        img = shift(s)
        for b in graph.adjacency[a]:
            if allowed is not None and b not in allowed:
                continue
            nxt = (b, img & close[b])
            if nxt in parent:
                continue
            parent[nxt] = st
            if nxt[1] == 0:
                return [x for x, _ in _path_back(parent, nxt)], len(parent)
            if len(parent) > cap:
                raise StateCapExceeded(len(parent))
            queue.append(nxt)
    return None, len(parent)


def tracking_failures(sys: SystemLevel, path: Sequence[int], eps: Fraction, which: int) -> dict[int, int]:
    """For every candidate P the first time t with bound(pi^t P, path[t]) > eps (-1 if none)."""
    model = sys.model
    out = {}
    for p in range(sys.n):
        q, t_fail = p, -1
        for t, a in enumerate(path):
            if model._pair(q, a)[which] > eps:
                t_fail = t
                break
            q = sys.pi[q]
        out[p] = t_fail
    return out


def check_shadowing(sys: SystemLevel, eps, delta, state_cap: int = DEFAULT_STATE_CAP) -> ShadowingVerdict:
    eps, delta = as_scalar(eps), as_scalar(delta)
    shift = mask_map(sys)
    graph, close = _pass_inputs(sys, eps, delta, certify=True)
    try:
        bad, states = _subset_search(graph, close, shift, range(sys.n), None, state_cap)
    except StateCapExceeded as exc:
        return ShadowingVerdict("shadowing", eps, delta, INCONCLUSIVE,
                                notes=[f"state cap {state_cap} exceeded ({exc.args[0]} states)"])
    if bad is None:
        cert = {"rule": "subset tracking over existential delta-graph, dmax closeness",
                "states_explored": states, "graph": graph.to_json()["edges"]}
        return ShadowingVerdict("shadowing", eps, delta, CERTIFIED, certificate=cert)

    ugraph, uclose = _pass_inputs(sys, eps, delta, certify=False)
    live = live_nodes(ugraph)
    try:
        path, _ = _subset_search(ugraph, uclose, shift, sorted(live), live, state_cap)
    except StateCapExceeded as exc:
        path = None
    if path is not None:
        stem, cycle = _lasso_tail(ugraph, path[-1], live)
        witness = {"path": path, "continuation_stem": stem[1:], "continuation_cycle": cycle,
                   "rule": "universal delta-graph edges; dmin separation",
                   "separation_times": {str(p): t for p, t in
                                        tracking_failures(sys, path, eps, 0).items()}}
        return ShadowingVerdict("shadowing", eps, delta, REFUTED, witness=witness)
    return ShadowingVerdict("shadowing", eps, delta, INCONCLUSIVE,
                            witness={"untracked_candidate_path": bad},
                            notes=["an existential path loses every dmax shadow, "
                                   "but no universal path separates all dmin shadows; refine the model"])


def replay_shadowing_refutation(sys: SystemLevel, eps, delta, witness: dict) -> bool:
    """Standalone check of a refutation witness."""
    eps, delta = as_scalar(eps), as_scalar(delta)
    model = sys.model
    path = list(witness["path"])
    tail = list(witness.get("continuation_stem", [])) + list(witness["continuation_cycle"][1:])
    full = path + tail
    for a, b in zip(full, full[1:]):
        if model.dmax(sys.pi[a], b) > delta:
            return False
    cyc = witness["continuation_cycle"]
    if cyc[0] != cyc[-1] or len(cyc) < 2:
        return False
    fails = tracking_failures(sys, path, eps, 0)
    return all(t >= 0 for t in fails.values())


def positive_grid(model: FiniteModel) -> list[Fraction]:
    return [v for v in threshold_grid(model) if v > 0]


@dataclass
class DeltaSearch:
    epsilon: Fraction
    delta: Fraction | None
    result: str
    trace: list[tuple[Fraction, str]]

    def to_json(self) -> dict:
        return {"epsilon": format_scalar(self.epsilon),
                "delta": None if self.delta is None else format_scalar(self.delta),
                "result": self.result,
                "trace": [[format_scalar(d), r] for d, r in self.trace]}


def find_delta(sys: SystemLevel, eps, state_cap: int = DEFAULT_STATE_CAP) -> DeltaSearch:
    """Largest positive grid delta with certified shadowing (descending scan)."""
    eps = as_scalar(eps)
    trace = []
    for delta in reversed(positive_grid(sys.model)):
        verdict = check_shadowing(sys, eps, delta, state_cap)
        trace.append((delta, verdict.result))
        if verdict.result == CERTIFIED:
            return DeltaSearch(eps, delta, CERTIFIED, trace)
    if trace and all(r == REFUTED for _, r in trace):
        return DeltaSearch(eps, None, "refuted-for-all", trace)
    return DeltaSearch(eps, None, INCONCLUSIVE, trace)


# --------------------------------------------------------------------------
# periodic variants


def _variant_setup(sys: SystemLevel, variant: str):
    if variant not in (PERIODIC, STRICT, PSEUDO):
        raise ValueError(f"unknown variant {variant!r}")
    if variant != PSEUDO:
        sys.require_periods()
    all_mask = (1 << sys.n) - 1
    if variant == STRICT:
        T = 1
        for qs in sys.min_periods:
            for q in qs:
                T = T * q // math.gcd(T, q)
        good = []
        for t in range(T):
            m = t if t else T
            good.append(sum(1 << p for p in range(sys.n) if sys.has_period_dividing(p, m)))
        return T, good, all_mask
    if variant == PERIODIC:
        eligible = sum(1 << p for p in range(sys.n) if sys.has_periodic_points(p))
        return 1, [all_mask], eligible
    return 1, [all_mask], all_mask


def _cycle_search(graph: ChainGraph, close: list[int], shift: MaskMap, a0: int, s0: int,
                  T: int, good: list[int], cap: int, allowed: set[int] | None = None):
    """Shortest closed walk at a0 whose surviving shadows fail the variant."""
    start = (a0, s0, 0)
    parent = {start: None}
    queue = deque([start])
    while queue:
        st = queue.popleft()
        a, s, t = st
        img = shift(s)
        t2 = (t + 1) % T
        for b in graph.adjacency[a]:
            if allowed is not None and b not in allowed:
                continue
            s2 = img & close[b]
            if b == a0 and not (s2 & good[t2]):
                return [x for x, _, _ in _path_back(parent, st)] + [a0], len(parent)
            nxt = (b, s2, t2)
            if nxt in parent:
                continue
            parent[nxt] = st
            if len(parent) > cap:
                raise StateCapExceeded(len(parent))
            queue.append(nxt)
    return None, len(parent)


def _all_cycle_search(sys, graph, close, variant, cap, starts=None, allowed=None):
    shift = mask_map(sys)
    T, good, eligible = _variant_setup(sys, variant)
    total = 0
    for a0 in (starts if starts is not None else range(sys.n)):
        found, states = _cycle_search(graph, close, shift, a0, close[a0] & eligible, T, good,
                                      cap, allowed)
        total += states
        if found is not None:
            return found, total
    return None, total


def shadow_ok(sys: SystemLevel, cycle: Sequence[int], p: int, eps: Fraction, variant: str,
              which: int = 1) -> bool:
    """Does atom p (bound ``which``) shadow the closed walk ``cycle`` under the variant?"""
    m = len(cycle) - 1
    if variant == STRICT and not sys.has_period_dividing(p, m):
        return False
    if variant == PERIODIC and not sys.has_periodic_points(p):
        return False
    q = p
    for a in cycle:
        if sys.model._pair(q, a)[which] > eps:
            return False
        q = sys.pi[q]
    return True


def _shortest_return(graph: ChainGraph, a0: int) -> list[int]:
    prev = {}
    queue = deque()
    for w in graph.adjacency[a0]:
        if w not in prev:
            prev[w] = a0
            queue.append(w)
    while a0 not in prev:
        v = queue.popleft()
        for w in graph.adjacency[v]:
            if w not in prev:
                prev[w] = v
                queue.append(w)
    path = [a0]
    v = prev[a0]
    while v != a0:
        path.append(v)
        v = prev[v]
    path.append(a0)
    return [a0] + list(reversed(path[1:-1])) + [a0]


def periodic_certificates(sys: SystemLevel, graph: ChainGraph, eps: Fraction, variant: str):
    """One representative cycle per chain component with a replayable shadow."""
    out = []
    for comp in chain_components(graph):
        cycle = _shortest_return(graph, comp[0])
        shadow = next((p for p in range(sys.n) if shadow_ok(sys, cycle, p, eps, variant)), None)
        if shadow is None:
            raise AssertionError("certified search but representative cycle has no shadow")
        out.append(PeriodicShadowCertificate(tuple(cycle), shadow, variant,
                                             tuple(sys.iterate(shadow, i) for i in range(len(cycle))),
                                             tuple(sorted(sys.min_periods[shadow]))))
    return out


def periodic_refutation_evidence(sys: SystemLevel, cycle: Sequence[int], eps: Fraction,
                                 variant: str) -> dict:
    """Exhaustive per-atom reason why no shadow exists (dmin separation or period)."""
    m = len(cycle) - 1
    evidence = {}
    for p in range(sys.n):
        reason = None
        if variant == STRICT and not sys.has_period_dividing(p, m):
            reason = {"ineligible": f"least periods {sorted(sys.min_periods[p])} do not divide {m}"}
        elif variant == PERIODIC and not sys.has_periodic_points(p):
            reason = {"ineligible": "no periodic points"}
        else:
            q = p
            for t, a in enumerate(cycle):
                lo = sys.model.dmin(q, a)
                if lo > eps:
                    reason = {"time": t, "dmin": format_scalar(lo)}
                    break
                q = sys.pi[q]
        evidence[str(p)] = reason
    return evidence


def check_periodic_shadowing(sys: SystemLevel, eps, delta, variant: str = PERIODIC,
                             state_cap: int = DEFAULT_STATE_CAP) -> ShadowingVerdict:
    eps, delta = as_scalar(eps), as_scalar(delta)
    kind = f"{variant}-periodic-shadowing" if variant != PERIODIC else "periodic-shadowing"
    graph, close = _pass_inputs(sys, eps, delta, certify=True)
    try:
        bad, states = _all_cycle_search(sys, graph, close, variant, state_cap)
    except StateCapExceeded as exc:
        return ShadowingVerdict(kind, eps, delta, INCONCLUSIVE,
                                notes=[f"state cap {state_cap} exceeded ({exc.args[0]} states)"])
    if bad is None:
        certs = periodic_certificates(sys, graph, eps, variant)
        return ShadowingVerdict(kind, eps, delta, CERTIFIED, certificate={
            "rule": "closed-walk search over existential delta-graph, dmax closeness",
            "states_explored": states,
            "components": [c.to_json() for c in certs]})

    ugraph, uclose = _pass_inputs(sys, eps, delta, certify=False)
    try:
        cycle, _ = _all_cycle_search(sys, ugraph, uclose, variant, state_cap)
    except StateCapExceeded:
        cycle = None
    if cycle is not None:
        return ShadowingVerdict(kind, eps, delta, REFUTED, witness={
            "cycle": cycle, "length": len(cycle) - 1,
            "rule": "universal delta-graph edges; dmin separation",
            "evidence": periodic_refutation_evidence(sys, cycle, eps, variant)})
    return ShadowingVerdict(kind, eps, delta, INCONCLUSIVE,
                            witness={"untracked_candidate_cycle": bad},
                            notes=["an existential cycle has no dmax shadow, "
                                   "but no universal cycle separates; refine the model"])


def replay_periodic_refutation(sys: SystemLevel, eps, delta, variant: str, witness: dict) -> bool:
    eps, delta = as_scalar(eps), as_scalar(delta)
    cycle = list(witness["cycle"])
    if len(cycle) < 2 or cycle[0] != cycle[-1]:
        return False
    for a, b in zip(cycle, cycle[1:]):
        if sys.model.dmax(sys.pi[a], b) > delta:
            return False
    ev = periodic_refutation_evidence(sys, cycle, eps, variant)
    return all(r is not None for r in ev.values())


def replay_periodic_certificate(sys: SystemLevel, eps, delta, cert: dict) -> bool:
    eps, delta = as_scalar(eps), as_scalar(delta)
    cycle = list(cert["cycle"])
    for a, b in zip(cycle, cycle[1:]):
        if sys.model.dmin(sys.pi[a], b) > delta:
            return False
    return shadow_ok(sys, cycle, cert["shadow"], eps, cert["variant"])


# --------------------------------------------------------------------------
# resolution across levels


def resolve(family: SystemFamily, check: Callable[[SystemLevel], ShadowingVerdict],
            max_level: int | None = None, start_level: int | None = None):
    """Run ``check`` at increasing levels until conclusive; returns (verdict, level, family)."""
    k = start_level or family.depth
    max_level = max_level or k
    verdict = None
    while k <= max_level:
        if k > family.depth:
            try:
                family = extend_family(family, k)
            except RefinementNeeded:
                break
        verdict = check(family.level(k))
        if verdict.result != INCONCLUSIVE:
            return verdict, k, family
        k += 1
    return verdict, k - 1, family


def strict_refutation_all_delta(family: SystemFamily, eps, max_level: int = 8,
                                level: int | None = None, state_cap: int = DEFAULT_STATE_CAP) -> dict:
    """Strict periodic shadowing refuted at every positive grid delta of ``level``.

    A refutation witness at delta stays a witness at every delta' >= delta
    (its cycle is still a universal delta'-cycle), so the smallest positive
    grid value decides the whole grid; the witness is replayed at each value.
    """
    eps = as_scalar(eps)
    level = level or family.depth
    grid = positive_grid(family.level(level).model)
    d0 = grid[0]
    verdict, used, fam = resolve(family, lambda s: check_periodic_shadowing(s, eps, d0, STRICT, state_cap),
                                 max_level=max_level, start_level=level)
    doc = {"epsilon": format_scalar(eps), "grid_level": level, "grid_size": len(grid),
           "smallest_delta": format_scalar(d0), "resolved_level": used,
           "result": verdict.result, "verdict": verdict.to_json()}
    if verdict.result == REFUTED:
        sys = fam.level(used)
        replays = [replay_periodic_refutation(sys, eps, d, STRICT, verdict.witness) for d in grid]
        doc["replayed_at_all_grid_deltas"] = all(replays)
        if not all(replays):
            doc["result"] = INCONCLUSIVE
    return doc


# --------------------------------------------------------------------------
# equicontinuity and continuous shadowing


def _as_family(sys) -> SystemFamily:
    if isinstance(sys, SystemFamily):
        return sys
    return SystemFamily((sys,), (), None)


def _non_isometric_mesh(sys: SystemLevel) -> Fraction:
    return max((a.diameter for a in sys.model.atoms if a.id not in sys.isometric), default=Fraction(0))


def _level_preservation_pair(family: SystemFamily):
    """A pair of sibling atoms whose images have different parents, if any."""
    for k, parent in enumerate(family.parents):
        coarse, fine = family.levels[k], family.levels[k + 1]
        by_parent = {}
        for a in range(fine.n):
            by_parent.setdefault(parent[a], []).append(a)
        for sibs in by_parent.values():
            for x in sibs:
                for y in sibs:
                    if x < y and parent[fine.pi[x]] != parent[fine.pi[y]]:
                        return k + 2, x, y
    return None


def equicontinuity_modulus(family, eps, max_level: int | None = None) -> dict:
    """delta with d(x,y) <= delta => sup_i d(f^i x, f^i y) <= eps, or a refutation."""
    eps = as_scalar(eps)
    family = _as_family(family)
    violations = refinement_violations(family)
    if violations:
        pair = _level_preservation_pair(family)
        out = {"result": INCONCLUSIVE, "epsilon": format_scalar(eps), "violations": violations[:5]}
        if pair is not None:
            k, x, y = pair
            sys = family.level(k)
            model = sys.model
            for t in range(1, sys.n + 1):
                px, py = sys.iterate(x, t), sys.iterate(y, t)
                if model.dmin(px, py) > eps:
                    out.update(result=REFUTED, level=k, pair=[x, y],
                               initial_distance_upper=format_scalar(model.dmax(x, y)),
                               time=t, separation_lower=format_scalar(model.dmin(px, py)))
                    return out
        return out
    max_level = max_level or family.depth
    k = 1
    while k <= max_level:
        if k > family.depth:
            try:
                family = extend_family(family, k)
            except RefinementNeeded:
                break
        sys = family.level(k)
        gap = sys.model.min_gap
        if _non_isometric_mesh(sys) <= eps:
            bound = eps if gap is None else min(gap, eps)
            below = [v for v in positive_grid(sys.model) if v < bound]
            if not below and gap is None:
                below = [eps]
            if below:
                return {"result": CERTIFIED, "epsilon": format_scalar(eps), "level": k,
                        "delta": format_scalar(below[-1]),
                        "min_gap": None if gap is None else format_scalar(gap),
                        "non_isometric_mesh": format_scalar(_non_isometric_mesh(sys)),
                        "rule": "exact level-preserving permutation; points closer than the "
                                "minimal gap share an atom forever"}
        k += 1
    return {"result": INCONCLUSIVE, "epsilon": format_scalar(eps),
            "required_level": k, "reason": "no available level has non-isometric mesh <= epsilon"}


def _pair_reach(sys: SystemLevel, graph: ChainGraph, a0: int, forward: bool):
    """Pairs (pi^i a0, A_i) over all pseudo-orbit paths from a0 (i >= 0 or i <= 0)."""
    if forward:
        step_true = sys.pi
        nexts = graph.adjacency
    else:
        step_true = sys.pi_inverse
        rev = [[] for _ in range(graph.n)]
        for a, b in graph.edges():
            rev[b].append(a)
        nexts = rev
    seen = {(a0, a0)}
    queue = [(a0, a0)]
    for x, a in queue:
        y = step_true[x]
        for b in nexts[a]:
            st = (y, b)
            if st not in seen:
                seen.add(st)
                queue.append(st)
    return seen


def continuous_shadowing_construct(sys, eps, max_level: int | None = None) -> dict:
    """delta and the tracking rule r(x) = x_0, verified over all two-sided atom paths.

    First tries gamma from the equicontinuity modulus and delta from
    gamma-shadowing. When the finest level is too coarse for gamma, falls back
    to the largest grid delta whose tracking bound is within eps directly
    (the bound only grows with delta, so a bisection over the grid suffices).
    """
    eps = as_scalar(eps)
    family = _as_family(sys)
    level = family.finest
    half = eps / 2
    eq = equicontinuity_modulus(family, half, max_level)
    out = {"epsilon": format_scalar(eps), "level": level.model.level, "rule": "r(x) = x_0", "equicontinuity": eq}
    delta = None
    if eq["result"] == CERTIFIED:
        gamma = min(as_scalar(eq["delta"]), half)
        out["gamma"] = format_scalar(gamma)
        fwd = find_delta(level, gamma)
        bwd = find_delta(level_power(level, -1), gamma)
        if fwd.delta is not None and bwd.delta is not None:
            delta = min(fwd.delta, bwd.delta)
            out["route"] = "equicontinuity"
    if delta is None:
        grid = threshold_grid(level.model)
        lo, hi = -1, len(grid) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if replay_first_atom_tracking(level, eps, grid[mid]) <= eps:
                lo = mid
            else:
                hi = mid - 1
        if lo < 0:
            return {**out, "result": INCONCLUSIVE,
                    "reason": "tracking bound exceeds epsilon even at delta = 0 at this resolution"}
        delta = grid[lo]
        out["route"] = "direct"
    graph = build_chain_graph(level, delta, EXISTENTIAL)
    model = level.model
    worst = Fraction(0)
    pairs = 0
    for a0 in range(level.n):
        for forward in (True, False):
            for x, a in _pair_reach(level, graph, a0, forward):
                pairs += 1
                worst = max(worst, model.dmax(x, a))
    ok = worst <= eps
    return {**out, "result": CERTIFIED if ok else INCONCLUSIVE, "delta": format_scalar(delta),
            "tracking_bound": format_scalar(worst), "pairs_checked": pairs}


def replay_first_atom_tracking(sys: SystemLevel, eps, delta) -> Fraction:
    """Worst dmax(pi^i A_0, A_i) over all forward and backward existential paths."""
    eps, delta = as_scalar(eps), as_scalar(delta)
    graph = build_chain_graph(sys, delta, EXISTENTIAL)
    worst = Fraction(0)
    for a0 in range(sys.n):
        for forward in (True, False):
            for x, a in _pair_reach(sys, graph, a0, forward):
                worst = max(worst, sys.model.dmax(x, a))
    return worst


def classify_orbit_closure(family: SystemFamily, atom: int, level: int | None = None) -> dict:
    """Cycle length of the atom's ancestor at every level."""
    level = level or family.depth
    periods = []
    for k in range(1, level + 1):
        anc = family.ancestor(atom, level, k)
        periods.append(family.level(k).cycle_lengths()[anc])
    for p, q in zip(periods, periods[1:]):
        if q % p:
            raise ValueError(f"cycle lengths {p} -> {q} break divisibility; refinement is inconsistent")
    sys = family.level(level)
    if atom in sys.rigid:
        return {"kind": "periodic", "period": periods[-1], "levels": periods, "evidence": "rigid atom"}
    if len(periods) > 1 and all(q > p for p, q in zip(periods, periods[1:])):
        return {"kind": "odometer_like", "chain": periods, "limited_to_level": level}
    if len(periods) > 1 and periods[-1] == periods[-2]:
        return {"kind": "periodic", "period": periods[-1], "levels": periods,
                "evidence": "cycle length stabilized", "limited_to_level": level}
    return {"kind": "odometer_like", "chain": periods, "limited_to_level": level}
