"""Scenario pipelines bundling certificates and refutations into reports."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .chain import build_chain_graph, decompose, verify_cyclic_properties
from .shadowing import (CERTIFIED, PERIODIC, PSEUDO, REFUTED, STRICT, check_periodic_shadowing, check_shadowing,
                        classify_orbit_closure, continuous_shadowing_construct,
                        equicontinuity_modulus, positive_grid, replay_first_atom_tracking,
                        replay_periodic_certificate, replay_periodic_refutation,
                        strict_refutation_all_delta)
from .space import format_scalar, grid_below, pow2, random_interval_model, threshold_grid
from .stability import stability_probe
from .systems import (build_identity, build_odometer, build_paper_example, embed_binary_odometer,
                      gamma_orbits_system, identity_model, rigid_refinement_family, system_power)


@dataclass
class ScenarioResult:
    scenario: str
    inputs: dict
    verdicts: list[dict] = field(default_factory=list)
    wall_time: float | None = None

    @property
    def passed(self) -> bool:
        return all(v.get("passed", False) for v in self.verdicts)

    def add(self, name: str, passed: bool, **payload):
        self.verdicts.append({"name": name, "passed": bool(passed), **payload})

    def to_json(self, timing: bool = False) -> dict:
        doc = {"scenario": self.scenario, "inputs": self.inputs, "passed": self.passed,
               "verdicts": self.verdicts}
        if timing and self.wall_time is not None:
            doc["wall_time_s"] = round(self.wall_time, 3)
        return doc


def _fmt(x):
    return None if x is None else format_scalar(x)


def verify_example(K: int = 4, eps_grid=None, state_cap: int = 2 ** 18) -> ScenarioResult:
    """Properties (1)-(5) of the modified odometer at level K."""
    if K < 2:
        raise ValueError("the example needs level K >= 2")
    start = time.perf_counter()
    family = build_paper_example(K)
    f = family.finest
    model = f.model
    eps_grid = list(eps_grid) if eps_grid else [Fraction(1, 4), Fraction(1, 8), Fraction(1, 3 ** K)]
    res = ScenarioResult("verify-example", {"level": K, "atoms": f.n,
                                            "eps_grid": [format_scalar(e) for e in eps_grid]})

    # (1) every atom contains a periodic atom at some level <= K
    missing = []
    witnesses = {}
    for k in range(1, K + 1):
        lev = family.level(k)
        for a in range(lev.n):
            if k == K:
                ok = a in lev.rigid or bool(lev.min_periods[a])
                witness = {"rigid": a in lev.rigid, "min_periods": sorted(lev.min_periods[a])}
            else:
                found = None
                for k2 in range(k + 1, K + 1):
                    rigid = [d for d in family.descendants(a, k, k2) if d in family.level(k2).rigid]
                    if rigid:
                        found = {"level": k2, "atom": rigid[0]}
                        break
                ok = found is not None
                witness = found
            witnesses[f"{k}:{a}"] = witness
            if not ok:
                missing.append(f"{k}:{a}")
    res.add("(1) periodic points dense", not missing, missing=missing, witnesses=witnesses)

    # (2) equicontinuity
    eq = [equicontinuity_modulus(family, e) for e in eps_grid]
    res.add("(2) equicontinuous", all(d["result"] == CERTIFIED for d in eq), certificates=eq)

    # (3) periodic shadowing below the minimal gap
    grid = threshold_grid(model)
    delta3 = grid_below(grid, model.min_gap)
    v3 = check_periodic_shadowing(f, model.mesh, delta3, PERIODIC, state_cap)
    replay3 = v3.result == CERTIFIED and all(
        replay_periodic_certificate(f, model.mesh, delta3, c) for c in v3.certificate["components"])
    res.add("(3) periodic shadowing", v3.result == CERTIFIED and replay3, verdict=v3.to_json(),
            certificates_replayed=replay3)

    # (4) strict periodic shadowing fails along the J-cycle
    delta4 = Fraction(1, 3 ** K)
    v4 = check_periodic_shadowing(f, model.mesh, delta4, STRICT, state_cap)
    j_cycle = list(range(2 ** K)) + [0]
    ok4 = v4.result == REFUTED
    if ok4:
        ok4 = v4.witness["cycle"] == j_cycle and replay_periodic_refutation(f, model.mesh, delta4, STRICT,
                                                                            v4.witness)
    periods = sorted({q for qs in f.min_periods for q in qs})
    divides = [q for q in periods if (2 ** K) % q == 0]
    res.add("(4) strict periodic shadowing refuted", ok4 and not divides, verdict=v4.to_json(),
            expected_cycle=j_cycle, all_least_periods=periods, periods_dividing_cycle_length=divides)

    # (5) the cube has strict periodic shadowing
    cube_family = system_power(family, 3)
    cube = cube_family.finest
    v5 = check_periodic_shadowing(cube, model.mesh, delta3, STRICT, state_cap)
    replay5 = v5.result == CERTIFIED and all(
        replay_periodic_certificate(cube, model.mesh, delta3, c) for c in v5.certificate["components"])
    gamma_cycles = {}
    for a in range(cube.n):
        if a in cube.rigid:
            j = cube.cycle_lengths()[a]
            gamma_cycles.setdefault(str(j), 0)
            gamma_cycles[str(j)] += 1
    res.add("(5) cube has strict periodic shadowing", v5.result == CERTIFIED and replay5,
            verdict=v5.to_json(), certificates_replayed=replay5,
            cube_gamma_cycle_lengths=gamma_cycles)
    res.wall_time = time.perf_counter() - start
    return res


def corollary_1_1(K: int = 5, eps=Fraction(1, 8)) -> ScenarioResult:
    """Odometer: continuous shadowing holds, strict periodic shadowing does not."""
    start = time.perf_counter()
    family = build_odometer([2 ** k for k in range(1, K + 1)], K)
    f = family.finest
    res = ScenarioResult("corollary-1.1", {"m": [2 ** k for k in range(1, K + 1)], "level": K,
                                           "epsilon": format_scalar(eps)})
    cs = continuous_shadowing_construct(family, eps)
    delta = grid_below(threshold_grid(f.model), f.model.min_gap)
    worst = replay_first_atom_tracking(f, eps, delta)
    res.add("continuous shadowing", cs["result"] == CERTIFIED and worst <= eps, construction=cs,
            replay_delta=format_scalar(delta), replay_tracking_bound=format_scalar(worst))
    ref = strict_refutation_all_delta(family, eps)
    res.add("strict periodic shadowing refuted at every grid delta", ref["result"] == REFUTED,
            refutation=ref)
    res.wall_time = time.perf_counter() - start
    return res


def corollary_1_3(K: int = 4, eps=Fraction(1, 8), seed: int = 0, samples: int = 50) -> ScenarioResult:
    """f is not topologically stable, f^3 is."""
    start = time.perf_counter()
    family = build_paper_example(K)
    res = ScenarioResult("corollary-1.3", {"level": K, "epsilon": format_scalar(eps), "seed": seed,
                                           "samples": samples})
    rf = stability_probe(family, eps, seed, samples)
    res.add("f refuted", rf.mode == "refuted_by_necessary_condition", report=rf.to_json())
    rc = stability_probe(system_power(family, 3), eps, seed, samples)
    ev = rc.evidence
    ok = (rc.mode == "constructive" and rc.beta is not None and rc.beta > 0
          and ev.get("failures", 1) == 0 and ev.get("samples", 0) >= samples
          and Fraction(ev["conjugating_map"]["d_h_id_bound"]) < 2 * eps)
    res.add("f^3 constructive", ok, report=rc.to_json())
    res.wall_time = time.perf_counter() - start
    return res


def corollary_1_4(models: int = 20, max_atoms: int = 32, seed: int = 0) -> ScenarioResult:
    """Identity maps on random zero-dimensional models are stable."""
    start = time.perf_counter()
    rng = random.Random(seed)
    res = ScenarioResult("corollary-1.4", {"models": models, "max_atoms": max_atoms, "seed": seed})
    for i in range(models):
        n = rng.randint(1, max_atoms)
        base = build_identity(random_interval_model(rng, n))
        family = rigid_refinement_family(base, 2)
        gap = base.model.min_gap
        eps = gap if gap is not None else base.model.mesh
        rep = stability_probe(family, eps, seed=seed + i, samples=0, level=1)
        want_beta = gap if gap is not None else rep.beta
        ok = (rep.mode == "constructive" and rep.beta == want_beta
              and rep.evidence.get("failures", 1) == 0)
        res.add(f"identity model {i} ({n} atoms)", ok, beta=_fmt(rep.beta), min_gap=_fmt(gap),
                single_swaps=rep.evidence.get("single_swaps"), failures=rep.evidence.get("failures"))
    res.wall_time = time.perf_counter() - start
    return res


def proposition_1_1(J: int = 2, max_level: int = 4) -> ScenarioResult:
    """Finite unions of periodic orbits: equicontinuous with strict periodic shadowing."""
    start = time.perf_counter()
    base = gamma_orbits_system(J)
    family = rigid_refinement_family(base, 1)
    res = ScenarioResult("proposition-1.1", {"orbits": J, "atoms": base.n, "max_level": max_level})
    eps_values = positive_grid(base.model)
    rows = []
    all_ok = True
    for eps in eps_values:
        eq = equicontinuity_modulus(family, eps, max_level)
        if eq["result"] != CERTIFIED:
            rows.append({"epsilon": format_scalar(eps), "equicontinuity": eq["result"]})
            all_ok = False
            continue
        k = max(eq["level"], 1)
        family = family if family.depth >= k else rigid_refinement_family(base, k)
        lev = family.level(k)
        # strict certificate at the coarsest level whose mesh is within epsilon
        while lev.model.mesh > eps and k < max_level:
            k += 1
            family = rigid_refinement_family(base, k) if family.depth < k else family
            lev = family.level(k)
        delta = grid_below(threshold_grid(lev.model), lev.model.min_gap)
        v = check_periodic_shadowing(lev, eps, delta, STRICT)
        rows.append({"epsilon": format_scalar(eps), "level": k, "delta": format_scalar(delta),
                     "equicontinuity_delta": eq["delta"], "strict": v.result})
        all_ok = all_ok and v.result == CERTIFIED
    res.add("equicontinuous with strict periodic shadowing at every grid epsilon", all_ok, grid=rows)
    res.wall_time = time.perf_counter() - start
    return res


def bundled_systems() -> dict:
    """Small instances of every built-in system, sized for whole-grid sweeps."""
    return {
        "odometer-2^k-K4": build_odometer([2, 4, 8, 16], 4).finest,
        "odometer-3^k-K2": build_odometer([3, 9], 2).finest,
        "embedded-binary-odometer-K3": embed_binary_odometer(3).finest,
        "paper-example-K2": build_paper_example(2).finest,
        "paper-example-K2-cubed": system_power(build_paper_example(2), 3).finest,
        "gamma-orbits-J1": gamma_orbits_system(1),
        "identity-5": build_identity(identity_model(5)),
    }


VARIANTS = ("shadowing", STRICT, PERIODIC, PSEUDO)


def _verdict(sys, eps, delta, variant):
    if variant == "shadowing":
        return check_shadowing(sys, eps, delta).result
    return check_periodic_shadowing(sys, eps, delta, variant).result


def _structure_classes(values, key):
    """Representatives of maximal runs with equal key (runs are contiguous for monotone keys)."""
    reps, seen = [], set()
    for v in values:
        k = key(v)
        if k not in seen:
            seen.add(k)
            reps.append(v)
    return reps


def invariant_sweep(sys, powers=(2, 3)) -> dict:
    """Variant ordering, monotonicity and the orbit-segment power law over the whole grid.

    Grid values giving identical delta-graphs (resp. closeness relations) give
    identical inputs to every check, so one representative per class suffices.
    """
    m, n, pi = sys.model, sys.n, sys.pi
    grid = threshold_grid(m)
    eps_reps = _structure_classes(grid, lambda e: tuple(
        (m.dmin(p, b) <= e, m.dmax(p, b) <= e) for p in range(n) for b in range(n)))
    delta_reps = _structure_classes(grid, lambda d: tuple(
        (m.dmin(pi[a], b) <= d, m.dmax(pi[a], b) <= d) for a in range(n) for b in range(n)))
    table = {v: [[_verdict(sys, e, d, v) for d in delta_reps] for e in eps_reps] for v in VARIANTS}
    problems = []
    for i, e in enumerate(eps_reps):
        for j, d in enumerate(delta_reps):
            s, p, q = table[STRICT][i][j], table[PERIODIC][i][j], table[PSEUDO][i][j]
            if (s == CERTIFIED and p != CERTIFIED) or (p == CERTIFIED and q != CERTIFIED):
                problems.append(f"ordering at eps={format_scalar(e)} delta={format_scalar(d)}: {s}/{p}/{q}")
            for v in VARIANTS:
                r = table[v][i][j]
                if r == CERTIFIED and ((i + 1 < len(eps_reps) and table[v][i + 1][j] != CERTIFIED)
                                       or (j > 0 and table[v][i][j - 1] != CERTIFIED)):
                    problems.append(f"{v} certification not monotone at eps={format_scalar(e)} "
                                    f"delta={format_scalar(d)}")
                if r == REFUTED and ((i > 0 and table[v][i - 1][j] != REFUTED)
                                     or (j + 1 < len(delta_reps) and table[v][i][j + 1] != REFUTED)):
                    problems.append(f"{v} refutation not monotone at eps={format_scalar(e)} "
                                    f"delta={format_scalar(d)}")
    # power law on the orbit-edge segment (delta below every gap)
    gap = m.min_gap
    segment = [d for d in delta_reps if gap is None or d < gap]
    power_cells = 0
    for k in powers:
        sk = system_power(sys, k)
        for e in eps_reps:
            for d in segment:
                power_cells += 1
                a, b = check_shadowing(sys, e, d).result, check_shadowing(sk, e, d).result
                if a != b:
                    problems.append(f"power {k} differs at eps={format_scalar(e)} delta={format_scalar(d)}: {a} vs {b}")
    counts = {v: {r: sum(row.count(r) for row in table[v]) for r in ("certified", "refuted", "inconclusive")}
              for v in VARIANTS}
    return {"grid_size": len(grid), "eps_classes": len(eps_reps), "delta_classes": len(delta_reps),
            "cells": len(eps_reps) * len(delta_reps), "power_cells": power_cells,
            "verdict_counts": counts, "problems": problems}


def invariants(seed: int = 0) -> ScenarioResult:
    """Whole-grid invariant sweep over every bundled system."""
    start = time.perf_counter()
    res = ScenarioResult("invariants", {"systems": sorted(bundled_systems()), "powers": [2, 3]})
    for name, sys in bundled_systems().items():
        rep = invariant_sweep(sys)
        res.add(name, not rep["problems"], **rep)
    res.wall_time = time.perf_counter() - start
    return res


SCENARIOS = {
    "corollary-1.1": corollary_1_1,
    "corollary-1.3": corollary_1_3,
    "corollary-1.4": corollary_1_4,
    "proposition-1.1": proposition_1_1,
    "invariants": invariants,
}
