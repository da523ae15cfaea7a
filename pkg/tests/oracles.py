"""Brute-force oracles written independently of the library algorithms.

Shadow sets here are kept in original coordinates (the set of starting atoms
P whose orbit is still close) with explicit time modulo the lcm of the
permutation's cycle lengths, rather than the library's shifted bitmasks.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import combinations

import networkx as nx

from zerodim.space import random_interval_model, cylinder_model
from zerodim.systems import SystemLevel


def _lcm(values):
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def cycle_length(pi, a):
    b, k = pi[a], 1
    while b != a:
        b, k = pi[b], k + 1
    return k


def orbit_table(pi, L):
    """powers[t][p] = pi^t(p) for 0 <= t < L."""
    rows = [list(range(len(pi)))]
    for _ in range(L - 1):
        rows.append([pi[x] for x in rows[-1]])
    return rows


def delta_digraph(sys, delta, universal: bool) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(sys.n))
    for a in range(sys.n):
        for b in range(sys.n):
            d = sys.model.dmax(sys.pi[a], b) if universal else sys.model.dmin(sys.pi[a], b)
            if d <= delta:
                g.add_edge(a, b)
    return g


def live(g: nx.DiGraph) -> set:
    cyc = set()
    for comp in nx.strongly_connected_components(g):
        v = next(iter(comp))
        if len(comp) > 1 or g.has_edge(v, v):
            cyc |= comp
    out = set(cyc)
    for v in cyc:
        out |= nx.ancestors(g, v)
    return out


def _close(sys, eps, universal: bool):
    bound = sys.model.dmin if universal else sys.model.dmax
    return [[bound(p, b) <= eps for b in range(sys.n)] for p in range(sys.n)]


def _tracking_sets(sys, close, L):
    """ok[t][b] = starting atoms P with pi^t(P) close to b."""
    pw = orbit_table(sys.pi, L)
    return [[frozenset(p for p in range(sys.n) if close[pw[t][p]][b]) for b in range(sys.n)]
            for t in range(L)]


def shadowing_fails(sys, eps, delta, universal: bool) -> bool:
    """Is some pseudo-orbit left without any eps-close orbit?

    universal=False: existential graph, dmax closeness (failure blocks certification).
    universal=True: universal graph on live nodes, dmin closeness (failure refutes).
    """
    g = delta_digraph(sys, delta, universal)
    nodes = live(g) if universal else set(range(sys.n))
    close = _close(sys, eps, universal)
    L = _lcm(cycle_length(sys.pi, a) for a in range(sys.n))
    ok = _tracking_sets(sys, close, L)
    seen = set()
    stack = [(a, ok[0][a], 0) for a in sorted(nodes)]
    while stack:
        a, s, t = stack.pop()
        if not s:
            return True
        if (a, s, t) in seen:
            continue
        seen.add((a, s, t))
        t2 = (t + 1) % L
        for b in g.successors(a):
            if b in nodes:
                stack.append((b, s & ok[t2][b], t2))
    return False


def _variant_ok(sys, variant, p, m):
    if variant == "strict":
        return any(m % q == 0 for q in sys.min_periods[p])
    if variant == "periodic":
        return bool(sys.min_periods[p])
    return True


def periodic_fails(sys, eps, delta, variant: str, universal: bool) -> bool:
    """Is some delta-cycle (any length) without a shadow of the given variant?"""
    g = delta_digraph(sys, delta, universal)
    close = _close(sys, eps, universal)
    L = _lcm([cycle_length(sys.pi, a) for a in range(sys.n)]
             + [q for qs in sys.min_periods for q in qs])
    ok = _tracking_sets(sys, close, L)
    for a0 in range(sys.n):
        start = (a0, ok[0][a0], 0)
        seen = {start}
        stack = [start]
        while stack:
            a, s, t = stack.pop()
            t2 = (t + 1) % L
            for b in g.successors(a):
                s2 = s & ok[t2][b]
                if b == a0:
                    m = t2 if t2 else L
                    if not any(_variant_ok(sys, variant, p, m) for p in s2):
                        return True
                st = (b, s2, t2)
                if st not in seen:
                    seen.add(st)
                    stack.append(st)
    return False


def expected_verdict(fails_certify: bool, fails_refute: bool) -> str:
    if not fails_certify:
        return "certified"
    return "refuted" if fails_refute else "inconclusive"


def oracle_shadowing(sys, eps, delta) -> str:
    return expected_verdict(shadowing_fails(sys, eps, delta, False), shadowing_fails(sys, eps, delta, True))


def oracle_periodic(sys, eps, delta, variant) -> str:
    return expected_verdict(periodic_fails(sys, eps, delta, variant, False),
                            periodic_fails(sys, eps, delta, variant, True))


# ---------------------------------------------------------------------------
# graphs


def cycle_gcd(g: nx.DiGraph) -> int:
    """gcd of all simple cycle lengths of a strongly connected digraph."""
    out = 0
    for c in nx.simple_cycles(g):
        out = math.gcd(out, len(c))
    return out


def brute_parts(g: nx.DiGraph, period: int) -> list[list[int]]:
    """Cyclic classes: u ~ v iff some walk u -> v has length divisible by period.

    Computed from walk lengths mod period reachable in the product graph.
    """
    nodes = sorted(g.nodes)
    root = nodes[0]
    reach = {(root, 0)}
    stack = [(root, 0)]
    while stack:
        v, r = stack.pop()
        for w in g.successors(v):
            st = (w, (r + 1) % period)
            if st not in reach:
                reach.add(st)
                stack.append(st)
    classes = {}
    for v in nodes:
        rs = sorted(r for (w, r) in reach if w == v)
        assert len(rs) == 1, "walk lengths not determined mod period"
        classes.setdefault(rs[0], []).append(v)
    return [classes[r] for r in sorted(classes)]


def random_strong_digraph(rng: random.Random, n: int) -> nx.DiGraph:
    """Random strongly connected digraph on n nodes, sometimes strongly periodic."""
    while True:
        g = nx.DiGraph()
        g.add_nodes_from(range(n))
        if rng.random() < 0.5:
            # layered: nodes get classes mod k, edges only advance the class
            k = rng.randint(1, n)
            cls = [i % k for i in range(n)]
            rng.shuffle(cls)
            for u in range(n):
                for v in range(n):
                    if cls[v] == (cls[u] + 1) % k and rng.random() < 0.5:
                        g.add_edge(u, v)
        else:
            p = rng.uniform(0.1, 0.5)
            for u in range(n):
                for v in range(n):
                    if rng.random() < p:
                        g.add_edge(u, v)
        if n and nx.is_strongly_connected(g) and g.number_of_edges():
            return g


# ---------------------------------------------------------------------------
# random permutation systems


def random_system(rng: random.Random, n: int, kind: str | None = None) -> SystemLevel:
    """Random permutation on a random model; some atoms carry no periodic points."""
    if kind is None:
        kind = "interval" if rng.random() < 0.5 or n == 1 else "cylinder"
    if kind == "interval" or n == 1:
        model = random_interval_model(rng, n)
    else:
        radices = _factor(n)
        rng.shuffle(radices)
        model = cylinder_model(len(radices), radices)
    pi = list(range(n))
    rng.shuffle(pi)
    cyc_len = [cycle_length(pi, a) for a in range(n)]
    seen, cycles = set(), []
    for a in range(n):
        if a not in seen:
            c = [a]
            b = pi[a]
            while b != a:
                c.append(b)
                b = pi[b]
            seen.update(c)
            cycles.append(c)
    min_periods = [None] * n
    rigid = set()
    for c in cycles:
        kind = rng.random()
        L = cyc_len[c[0]]
        if kind < 0.5:
            qs = frozenset({L})
            rigid.update(c)
        elif kind < 0.75:
            qs = frozenset({L * rng.choice([2, 3])})
        else:
            qs = frozenset()
        for a in c:
            min_periods[a] = qs
    return SystemLevel(model, tuple(pi), min_periods=tuple(min_periods), rigid=frozenset(rigid))


def _factor(n):
    out, d = [], 2
    while n > 1:
        while n % d == 0:
            out.append(d)
            n //= d
        d += 1
    return out


def no_involution_exists(zeta, eta) -> bool:
    """Brute force: an involution sending z_i to e_i exists iff no z_i -> e_i = z_j has e_j != z_i."""
    forward = {z: e for z, e in zip(zeta, eta) if z != e}
    fixed = {z for z, e in zip(zeta, eta) if z == e}
    for z, e in forward.items():
        if e in fixed:
            return True
        if e in forward and forward[e] != z:
            return True
    return False


def swap_brute_check(phi, zeta, eta) -> list[str]:
    """Componentwise mapping, plus the involution law when one can exist.

    When none can exist the two constructed stages must each be involutions.
    """
    problems = []
    for z, e in zip(zeta, eta):
        if phi.apply(z) != e:
            problems.append(f"{z} -> {phi.apply(z)} != {e}")
    if no_involution_exists(zeta, eta):
        for i in range(len(phi.stages)):
            if not phi.stage_is_involution(i):
                problems.append(f"stage {i} is not an involution")
    else:
        for w in phi.moved_words():
            if phi.apply(phi.apply(w)) != w:
                problems.append(f"not an involution at {w}")
    return problems


def all_pairs(n):
    return list(combinations(range(n), 2))


def random_oracle_system(rng: random.Random, max_atoms: int = 10, max_interval_atoms: int = 6) -> SystemLevel:
    """Cylinder models up to max_atoms, interval models up to max_interval_atoms.

    Interval geometry has about n^2 distinct thresholds, so its full grid grows
    like n^4; the cap keeps the whole-grid comparison affordable.
    """
    if rng.random() < 0.5:
        n = rng.randint(2, max_atoms)
        return random_system(rng, n, kind="cylinder")
    return random_system(rng, rng.randint(1, max_interval_atoms), kind="interval")


def _grid_classes(grid, key):
    out = {}
    for v in grid:
        out.setdefault(key(v), v)
    return list(out.values())


def grid_equivalence(sys, check_shadowing, check_periodic_shadowing, grid):
    """Compare library verdicts with the oracle on every structurally distinct grid cell.

    Two grid values in the same class give identical delta-graphs (resp.
    closeness relations), so verdicts can only differ between classes.
    Returns (cells_compared, mismatches).
    """
    m, n, pi = sys.model, sys.n, sys.pi
    pairs = [(p, b) for p in range(n) for b in range(n)]
    steps = [(pi[a], b) for a in range(n) for b in range(n)]
    lo_eps = lambda e: tuple(m.dmin(p, b) <= e for p, b in pairs)
    hi_eps = lambda e: tuple(m.dmax(p, b) <= e for p, b in pairs)
    lo_delta = lambda d: tuple(m.dmin(p, b) <= d for p, b in steps)
    hi_delta = lambda d: tuple(m.dmax(p, b) <= d for p, b in steps)
    eps_values = _grid_classes(grid, lambda e: (lo_eps(e), hi_eps(e)))
    delta_values = _grid_classes(grid, lambda d: (lo_delta(d), hi_delta(d)))
    keys = {("e", e): (lo_eps(e), hi_eps(e)) for e in eps_values}
    keys.update({("d", d): (lo_delta(d), hi_delta(d)) for d in delta_values})
    cert_cache, ref_cache = {}, {}

    def passes(name, e, d, fn):
        (e_lo, e_hi), (d_lo, d_hi) = keys["e", e], keys["d", d]
        ck, rk = (name, e_hi, d_lo), (name, e_lo, d_hi)
        if ck not in cert_cache:
            cert_cache[ck] = fn(False)
        if not cert_cache[ck]:
            return "certified"
        if rk not in ref_cache:
            ref_cache[rk] = fn(True)
        return "refuted" if ref_cache[rk] else "inconclusive"

    cells, mismatches = 0, []
    for e in eps_values:
        for d in delta_values:
            cells += 1
            want = passes("shadowing", e, d, lambda u: shadowing_fails(sys, e, d, u))
            got = check_shadowing(sys, e, d).result
            if got != want:
                mismatches.append(("shadowing", e, d, got, want))
            for variant in ("strict", "periodic", "pseudo"):
                want = passes(variant, e, d, lambda u: periodic_fails(sys, e, d, variant, u))
                got = check_periodic_shadowing(sys, e, d, variant).result
                if got != want:
                    mismatches.append((variant, e, d, got, want))
    return cells, mismatches
