"""Conjugating maps for strictly periodic-shadowable equicontinuous systems."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .chain import decompose, part_diameter, r_delta
from .shadowing import (CERTIFIED, DEFAULT_STATE_CAP, REFUTED, STRICT, check_periodic_shadowing,
                        positive_grid, shadow_ok, strict_refutation_all_delta, _as_family)
from .space import CYLINDER, as_scalar, format_scalar
from .systems import (PreconditionError, RefinementNeeded, SystemFamily, SystemLevel,
                      extend_family, perturb, system_distance, transposition)


@dataclass
class SemiConjugacy:
    h: tuple[int, ...] | None
    d_h_id_bound: Fraction
    surjective: bool
    equation_verified: bool
    failing_atom: int | None = None
    mode: str = "atom"

    def to_json(self) -> dict:
        doc = {"mode": self.mode, "d_h_id_bound": format_scalar(self.d_h_id_bound),
               "surjective": self.surjective, "equation_verified": self.equation_verified}
        if self.h is not None:
            doc["h"] = list(self.h)
        if self.failing_atom is not None:
            doc["failing_atom"] = self.failing_atom
        return doc


def verify_semiconjugacy(f: SystemLevel, g: SystemLevel, h: Sequence[int]) -> SemiConjugacy:
    """Exact atomwise check of h o g = f o h."""
    if f.model != g.model:
        raise ValueError("systems live on different models")
    h = tuple(h)
    if len(h) != f.n:
        raise ValueError("h must assign a target to every atom")
    failing = next((a for a in range(f.n) if h[g.pi[a]] != f.pi[h[a]]), None)
    bound = max(f.model.dmax(a, h[a]) for a in range(f.n))
    return SemiConjugacy(h, bound, set(h) == set(range(f.n)), failing is None, failing)


@dataclass
class ConjugatingMap:
    """h(A) = pi^j(P_i) for A in the part D_{i,j} of the gamma-cyclic decomposition."""

    system: SystemLevel
    epsilon: Fraction
    delta: Fraction
    gamma: Fraction
    r_gamma: Fraction
    beta: Fraction
    labels: tuple[tuple[int, int], ...]
    periods: tuple[int, ...]
    shadows: tuple[int, ...]
    cycles: tuple[tuple[int, ...], ...]
    h: tuple[int, ...]
    bound: Fraction
    single_part: bool = False
    r_gamma_below_delta: bool = True

    def next_label(self, label: tuple[int, int]) -> tuple[int, int]:
        i, j = label
        return i, (j + 1) % self.periods[i]

    def target(self, label: tuple[int, int]) -> int:
        i, j = label
        return self.system.iterate(self.shadows[i], j)

    def to_json(self) -> dict:
        return {"epsilon": format_scalar(self.epsilon), "delta": format_scalar(self.delta),
                "gamma": format_scalar(self.gamma), "r_gamma": format_scalar(self.r_gamma),
                "beta": format_scalar(self.beta), "single_part": self.single_part,
                "r_gamma_below_delta": self.r_gamma_below_delta,
                "components": [{"period": m, "representative_cycle": list(c), "shadow": p,
                                "shadow_min_periods": sorted(self.system.min_periods[p])}
                               for m, c, p in zip(self.periods, self.cycles, self.shadows)],
                "labels": [list(l) for l in self.labels], "h": list(self.h),
                "d_h_id_bound": format_scalar(self.bound)}


def _largest_true(values: Sequence, pred) -> int | None:
    """Index of the last value satisfying a predicate that holds on a prefix."""
    lo, hi = -1, len(values) - 1
    if hi < 0 or not pred(values[0]):
        return None
    lo = 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if pred(values[mid]):
            lo = mid
        else:
            hi = mid - 1
    return lo


def build_conjugating_map(f: SystemLevel, eps, state_cap: int = DEFAULT_STATE_CAP) -> ConjugatingMap:
    eps = as_scalar(eps)
    f.require_periods()
    model = f.model
    grid = positive_grid(model)
    deltas = [d for d in grid if d < eps]
    if not deltas and model.n == 1:
        deltas = [eps / 2]

    def strict_ok(d):
        return check_periodic_shadowing(f, eps, d, STRICT, state_cap).result == CERTIFIED

    i = _largest_true(deltas, strict_ok)
    if i is None:
        raise PreconditionError("strict periodic shadowing is not certified for any grid delta < epsilon "
                                "at this level")
    delta = deltas[i]
    gammas = grid if grid else [eps / 2]
    # gammas with r(gamma) < delta first (a prefix, r is monotone), then the rest
    k = _largest_true(gammas, lambda g: r_delta(f, g) < delta)
    split = -1 if k is None else k
    order = list(reversed(gammas[:split + 1])) + list(reversed(gammas[split + 1:]))
    attempt = None
    for gamma in order:
        attempt = _recipe_at(f, eps, delta, gamma)
        if attempt is not None:
            break
    if attempt is None:
        raise PreconditionError(f"no grid gamma yields delta-cycles of representatives at delta = {delta}")
    labels, periods, shadows, cycles, beta, h, bound = attempt
    single = beta is None
    if single:
        # one part: the separation condition is vacuous, any positive beta works
        beta = model.diameter + 1
    r_gamma = r_delta(f, gamma)
    return ConjugatingMap(f, eps, delta, gamma, r_gamma, beta, tuple(labels), tuple(periods),
                          tuple(shadows), tuple(cycles), h, bound, single, r_gamma < delta)


def _recipe_at(f: SystemLevel, eps: Fraction, delta: Fraction, gamma: Fraction):
    """The construction at one gamma, or None when a step fails there."""
    model = f.model
    decomp = decompose(f, gamma)
    labels = [None] * f.n
    periods, shadows, cycles = [], [], []
    for ci, comp in enumerate(decomp.components):
        reps = [part[0] for part in comp.parts]
        cycle = reps + [reps[0]]
        if any(model.dmin(f.pi[a], b) > delta for a, b in zip(cycle, cycle[1:])):
            return None
        p = next((q for q in range(f.n) if shadow_ok(f, cycle, q, eps, STRICT)), None)
        if p is None:
            return None
        periods.append(comp.period)
        shadows.append(p)
        cycles.append(tuple(cycle))
        for j, part in enumerate(comp.parts):
            for a in part:
                labels[a] = (ci, j)
    parts = [part for _, _, part in decomp.parts()]
    beta = None
    for x in range(len(parts)):
        for y in range(x + 1, len(parts)):
            gap = min(model.dmin(a, b) for a in parts[x] for b in parts[y])
            beta = gap if beta is None else min(beta, gap)
    if beta is not None and beta <= 0:
        return None
    h = tuple(f.iterate(shadows[l[0]], l[1]) for l in labels)
    bound = max(model.dmax(a, h[a]) for a in range(f.n))
    if not bound < 2 * eps:
        return None
    return labels, periods, shadows, cycles, beta, h, bound


def verify_labelled(cm: ConjugatingMap, family: SystemFamily | None, level: int, g: SystemLevel,
                    working_level: int) -> SemiConjugacy:
    """h o g = f o h through part labels at a finer level.

    Each fine atom inherits the label of its ancestor at the working level.
    h is constant on labels and f advances h's targets, so the equation
    holds pointwise iff g advances every label.
    """
    if level == working_level:
        lab = cm.labels
    else:
        lab = tuple(cm.labels[family.ancestor(a, level, working_level)] for a in range(g.n))
    failing = next((a for a in range(g.n) if lab[g.pi[a]] != cm.next_label(lab[a])), None)
    targets = {cm.target(l) for l in set(lab)}
    return SemiConjugacy(None, cm.bound, len(targets) == cm.system.n, failing is None, failing,
                         mode="label")


def _swap_bound(model, a: int, b: int) -> Fraction:
    return model.dmax(a, b)


def _candidate_swaps(level_sys: SystemLevel, beta: Fraction) -> list[tuple[int, int]]:
    model = level_sys.model
    return [(a, b) for a in range(model.n) for b in range(a + 1, model.n)
            if _swap_bound(model, a, b) < beta]


@dataclass
class StabilityReport:
    epsilon: Fraction
    mode: str
    beta: Fraction | None = None
    evidence: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.mode in ("constructive", "refuted_by_necessary_condition") and \
            self.evidence.get("failures", 0) == 0

    def to_json(self) -> dict:
        return {"epsilon": format_scalar(self.epsilon), "mode": self.mode,
                "beta": None if self.beta is None else format_scalar(self.beta),
                "evidence": self.evidence}


def perturbation_check(cm: ConjugatingMap, family: SystemFamily, working_level: int, seed: int = 0,
                       samples: int = 50, max_level: int | None = None) -> dict:
    """Exhaustive single swaps below beta, then seeded multi-swap samples."""
    level = working_level
    max_level = max_level or working_level + 4
    swaps = []
    while level <= max_level:
        if level > family.depth:
            try:
                family = extend_family(family, level)
            except RefinementNeeded:
                break
        fine = family.level(level)
        swaps = _candidate_swaps(fine, cm.beta)
        if swaps:
            break
        level += 1
    if not swaps:
        return {"level": level, "single_swaps": 0, "samples": 0, "failures": 0,
                "note": "no swap perturbation below beta within the available levels"}
    fine = family.level(level)
    failures = []
    worst = Fraction(0)
    for a, b in swaps:
        g = perturb(fine, transposition(fine.n, [(a, b)]))
        dist = system_distance(fine, g).D[1]
        if not dist < cm.beta:
            raise AssertionError("admitted swap exceeds beta")
        worst = max(worst, dist)
        sc = verify_labelled(cm, family, level, g, working_level)
        if not sc.equation_verified:
            failures.append({"swap": [a, b], "failing_atom": sc.failing_atom})
    rng = random.Random(seed)
    sampled = 0
    attempts = 0
    while sampled < samples and attempts < 100 * samples:
        attempts += 1
        k = rng.randint(2, 5)
        picked, used = [], set()
        for a, b in rng.sample(swaps, min(len(swaps), 4 * k)):
            if a not in used and b not in used:
                picked.append((a, b))
                used.update((a, b))
            if len(picked) == k:
                break
        g = perturb(fine, transposition(fine.n, picked))
        dist = system_distance(fine, g).D[1]
        if not dist < cm.beta:
            continue
        sampled += 1
        worst = max(worst, dist)
        sc = verify_labelled(cm, family, level, g, working_level)
        if not sc.equation_verified:
            failures.append({"swaps": [list(p) for p in picked], "failing_atom": sc.failing_atom})
    return {"level": level, "single_swaps": len(swaps), "samples": sampled, "seed": seed,
            "max_distance_bound": format_scalar(worst), "failures": len(failures),
            "failure_details": failures[:10]}


def stability_probe(sys, eps, seed: int = 0, samples: int = 50, level: int | None = None,
                    max_level: int = 8, state_cap: int = DEFAULT_STATE_CAP) -> StabilityReport:
    """Refute through the strict periodic necessary condition, else construct and verify h."""
    eps = as_scalar(eps)
    family = _as_family(sys)
    level = level or family.depth
    working = family.level(level)
    if working.periods_known:
        refutation = strict_refutation_all_delta(family, eps, max_level=max_level, level=level,
                                                 state_cap=state_cap)
        if refutation["result"] == REFUTED:
            space = "cantor-cylinder" if working.model.metric_kind == CYLINDER else "cantor-interval"
            return StabilityReport(eps, "refuted_by_necessary_condition", None,
                                   {"space": space, "strict_refutation": refutation, "failures": 0})
    try:
        cm = build_conjugating_map(working, eps, state_cap)
    except PreconditionError as exc:
        return StabilityReport(eps, "inconclusive", None, {"reason": str(exc)})
    base = verify_semiconjugacy(working, working, cm.h)
    check = perturbation_check(cm, family, level, seed, samples, max_level)
    evidence = {"conjugating_map": cm.to_json(), "h_vs_f": base.to_json(), **check}
    mode = "constructive" if check.get("single_swaps", 0) > 0 and base.equation_verified \
        else "inconclusive"
    if not base.equation_verified:
        evidence["failures"] = evidence.get("failures", 0) + 1
    return StabilityReport(eps, mode, cm.beta, evidence)
