"""Homeomorphisms as exact atom permutations across resolution levels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .space import (CYLINDER, INTERVAL, Atom, Cylinder, FiniteModel, Interval,
                    ScaledCantor, as_scalar, cylinder_model, format_scalar,
                    geometry_metric, interval_model, ternary_children)


class ConstructionError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class RefinementNeeded(ValueError):
    def __init__(self, message: str, depth: int):
        super().__init__(message)
        self.depth = depth


def _minimal_divisors(values: Iterable[int]) -> frozenset[int]:
    vals = sorted(set(values))
    keep = []
    for v in vals:
        if not any(v % k == 0 for k in keep):
            keep.append(v)
    return frozenset(keep)


@dataclass(frozen=True)
class SystemLevel:
    """One resolution level of a homeomorphism f.

    ``pi[a]`` is the atom f maps atom ``a`` onto.  ``min_periods[a]`` is a
    divisibility-minimal set Q such that the least periods of periodic points
    inside ``a`` are exactly the multiples of elements of Q that occur, each
    q in Q occurring (empty: no periodic points).  ``rigid`` atoms consist of
    periodic points of period equal to the atom's cycle length.  ``isometric``
    atoms are carried isometrically by f.

    ``base``/``moved`` record perturbations g = phi o base where phi is the
    identity pointwise outside the atoms in ``moved``.
    """

    model: FiniteModel
    pi: tuple[int, ...]
    min_periods: tuple[frozenset, ...] | None = None
    rigid: frozenset | None = None
    isometric: frozenset = frozenset()
    periods_known: bool = True
    base: "SystemLevel | None" = field(default=None, compare=False, repr=False)
    moved: frozenset = frozenset()
    pi_inverse: tuple[int, ...] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        pi = tuple(int(x) for x in self.pi)
        n = self.model.n
        if len(pi) != n or sorted(pi) != list(range(n)):
            raise ConstructionError("permutation is not a bijection on atom ids")
        object.__setattr__(self, "pi", pi)
        inv = [0] * n
        for a, b in enumerate(pi):
            inv[b] = a
        object.__setattr__(self, "pi_inverse", tuple(inv))
        lengths = self.cycle_lengths()
        if self.rigid is None and self.min_periods is None:
            # a bare permutation of clopen blocks acts rigidly
            object.__setattr__(self, "rigid", frozenset(range(n)))
        elif self.rigid is None:
            object.__setattr__(self, "rigid", frozenset())
        object.__setattr__(self, "rigid", frozenset(self.rigid))
        if self.min_periods is None:
            mp = tuple(frozenset({lengths[a]}) if a in self.rigid else frozenset()
                       for a in range(n))
            object.__setattr__(self, "min_periods", mp)
        else:
            object.__setattr__(self, "min_periods",
                               tuple(frozenset(q) for q in self.min_periods))
        for a in self.rigid:
            if self.min_periods[a] != frozenset({lengths[a]}):
                raise ConstructionError(f"rigid atom {a} must have min period {lengths[a]}")
        for a, qs in enumerate(self.min_periods):
            if any(q % lengths[a] for q in qs):
                raise ConstructionError(f"atom {a}: periods must be multiples of the cycle length")
        object.__setattr__(self, "isometric", frozenset(self.isometric))
        object.__setattr__(self, "moved", frozenset(self.moved))

    @property
    def n(self) -> int:
        return self.model.n

    def cycle_lengths(self) -> tuple[int, ...]:
        cache = self.model._cache.setdefault("cycle_lengths", {})
        got = cache.get(self.pi)
        if got is not None:
            return got
        n = len(self.pi)
        out = [0] * n
        for start in range(n):
            if out[start]:
                continue
            cyc = [start]
            a = self.pi[start]
            while a != start:
                cyc.append(a)
                a = self.pi[a]
            for a in cyc:
                out[a] = len(cyc)
        got = tuple(out)
        cache[self.pi] = got
        return got

    def cycles(self) -> list[list[int]]:
        seen = set()
        out = []
        for start in range(self.n):
            if start in seen:
                continue
            cyc = [start]
            a = self.pi[start]
            while a != start:
                cyc.append(a)
                a = self.pi[a]
            seen.update(cyc)
            out.append(cyc)
        return out

    def iterate(self, atom: int, times: int) -> int:
        step = self.pi if times >= 0 else self.pi_inverse
        for _ in range(abs(times)):
            atom = step[atom]
        return atom

    def require_periods(self):
        if not self.periods_known:
            raise PreconditionError("periodic structure inside atoms is unknown for this system")

    def has_period_dividing(self, atom: int, m: int) -> bool:
        return any(m % q == 0 for q in self.min_periods[atom])

    def has_periodic_points(self, atom: int) -> bool:
        return bool(self.min_periods[atom])

    def to_json(self) -> dict:
        doc = self.model.to_json()
        doc["permutation"] = list(self.pi)
        doc["min_periods"] = [sorted(q) for q in self.min_periods]
        doc["rigid"] = sorted(self.rigid)
        doc["isometric"] = sorted(self.isometric)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "SystemLevel":
        model = FiniteModel.from_json(doc)
        mp = doc.get("min_periods")
        return cls(model, tuple(doc["permutation"]),
                   tuple(frozenset(q) for q in mp) if mp is not None else None,
                   frozenset(doc["rigid"]) if "rigid" in doc else None,
                   frozenset(doc.get("isometric", ())))


@dataclass(frozen=True)
class SystemFamily:
    """Levels 1..K; ``parents[k]`` maps atoms of levels[k+1] to levels[k]."""

    levels: tuple[SystemLevel, ...]
    parents: tuple[tuple[int, ...], ...]
    recipe: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "parents", tuple(tuple(p) for p in self.parents))
        if len(self.parents) != len(self.levels) - 1:
            raise ConstructionError("need one parent map per consecutive level pair")

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, k: int) -> SystemLevel:
        """1-based level accessor."""
        return self.levels[k - 1]

    @property
    def finest(self) -> SystemLevel:
        return self.levels[-1]

    def ancestor(self, atom: int, from_level: int, to_level: int) -> int:
        for k in range(from_level, to_level, -1):
            atom = self.parents[k - 2][atom]
        return atom

    def descendants(self, atom: int, from_level: int, to_level: int) -> list[int]:
        current = [atom]
        for k in range(from_level, to_level):
            parent = self.parents[k - 1]
            keep = set(current)
            current = [c for c, p in enumerate(parent) if p in keep]
        return current

    def to_json(self) -> dict:
        levels = []
        for i, lev in enumerate(self.levels):
            doc = lev.to_json()
            if i > 0:
                doc["parents"] = list(self.parents[i - 1])
            levels.append(doc)
        out = {"levels": levels}
        if self.recipe is not None:
            out["recipe"] = self.recipe
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "SystemFamily":
        if "levels" not in doc:
            return cls((SystemLevel.from_json(doc),), (), None)
        levels = tuple(SystemLevel.from_json(d) for d in doc["levels"])
        parents = tuple(tuple(d["parents"]) for d in doc["levels"][1:])
        return cls(levels, parents, doc.get("recipe"))


def refinement_violations(family: SystemFamily) -> list[str]:
    """parent o pi_{k+1} == pi_k o parent and geometric containment."""
    out = []
    for k, parent in enumerate(family.parents):
        coarse, fine = family.levels[k], family.levels[k + 1]
        if len(parent) != fine.n:
            out.append(f"level {k + 2}: parent map has wrong length")
            continue
        for a in range(fine.n):
            if parent[fine.pi[a]] != coarse.pi[parent[a]]:
                out.append(f"level {k + 2}: atom {a} breaks refinement commutation")
            child = fine.model.atoms[a].geometry
            par = coarse.model.atoms[parent[a]].geometry
            if not _contained(child, par):
                out.append(f"level {k + 2}: atom {a} not inside parent {parent[a]}")
    return out


def _contained(child, parent) -> bool:
    if isinstance(child, Cylinder):
        return child.word[:len(parent.word)] == parent.word
    lo, hi = child.hull()
    plo, phi = parent.hull()
    return plo <= lo and hi <= phi


# --------------------------------------------------------------------------
# odometers


def _check_chain(m: Sequence[int]):
    if not m or m[0] < 2:
        raise ConstructionError("periodic structure needs m_1 >= 2 (bad index 1)")
    for k in range(1, len(m)):
        if m[k] <= m[k - 1] or m[k] % m[k - 1]:
            raise ConstructionError(f"periodic structure breaks divisibility at index {k + 1}")


def odometer_digits(residue: int, m: Sequence[int]) -> tuple[int, ...]:
    """Mixed-radix digits of a residue mod m_k; binary chains give psi's bits."""
    digits = [residue % m[0]]
    for k in range(1, len(m)):
        digits.append((residue // m[k - 1]) % (m[k] // m[k - 1]))
    return tuple(digits)


def build_odometer(m: Sequence[int], K: int) -> SystemFamily:
    m = tuple(int(x) for x in m)
    if K < 1:
        raise ConstructionError("level must be >= 1")
    if len(m) < K:
        raise ConstructionError(f"periodic structure has {len(m)} terms, level {K} requested")
    _check_chain(m[:K])
    radices = (m[0],) + tuple(m[k] // m[k - 1] for k in range(1, K))
    levels, parents = [], []
    for k in range(1, K + 1):
        mk = m[k - 1]
        atoms = tuple(Atom(l, Cylinder(odometer_digits(l, m[:k]))) for l in range(mk))
        model = FiniteModel(k, CYLINDER, atoms, radices[:k])
        pi = tuple((l + 1) % mk for l in range(mk))
        levels.append(SystemLevel(model, pi, tuple(frozenset() for _ in range(mk)), frozenset(),
                                  frozenset(range(mk))))
        if k > 1:
            parents.append(tuple(l % m[k - 2] for l in range(mk)))
    return SystemFamily(tuple(levels), tuple(parents),
                        {"system": "odometer", "m": list(m), "power": 1})


def odometer_to_binary(xs: Sequence[int]) -> tuple[int, ...]:
    """psi for m_k = 2^k: x = (x_1, x_2, ...) to its binary digit sequence."""
    prev = 0
    out = []
    for k, x in enumerate(xs, start=1):
        diff = x - prev
        if diff % (2 ** (k - 1)):
            raise ValueError("not a point of X_m")
        bit = diff // 2 ** (k - 1)
        if bit not in (0, 1):
            raise ValueError("not a point of X_m")
        out.append(bit)
        prev = x
    return tuple(out)


def binary_to_odometer(bits: Sequence[int]) -> tuple[int, ...]:
    total, out = 0, []
    for k, b in enumerate(bits):
        total += b * 2 ** k
        out.append(total)
    return tuple(out)


# --------------------------------------------------------------------------
# ternary intervals and the modified odometer


def ternary_interval(word: Sequence[int]) -> Interval:
    """I_w: 0 keeps the left third, 1 the right third."""
    a, b = Fraction(0), Fraction(1)
    for s in word:
        if s == 0:
            b = (2 * a + b) / 3
        else:
            a = (a + 2 * b) / 3
    return Interval(a, b)


def j_interval(k: int, l: int) -> Interval:
    """J_{k,l} = I_{a_0 ... a_{k-1}} with l = sum a_i 2^i."""
    return ternary_interval(tuple((l >> i) & 1 for i in range(k)))


def gap_point(J: Interval, c: int) -> Fraction:
    a, b = J.lo, J.hi
    return (2 * a + b) / 3 + (c + 1) * (b - a) / 12


def gap_piece(J: Interval, c: int) -> ScaledCantor:
    return ScaledCantor(gap_point(J, c), (J.hi - J.lo) / 24)


def embed_binary_odometer(K: int) -> SystemFamily:
    """The 2^k odometer carried onto the ternary Cantor set by phi o psi."""
    levels, parents = [], []
    for k in range(1, K + 1):
        size = 2 ** k
        model = interval_model((j_interval(k, l) for l in range(size)), level=k)
        pi = tuple((l + 1) % size for l in range(size))
        levels.append(SystemLevel(model, pi, tuple(frozenset() for _ in range(size)), frozenset()))
        if k > 1:
            parents.append(tuple(l % (size // 2) for l in range(size)))
    return SystemFamily(tuple(levels), tuple(parents),
                        {"system": "embed-binary-odometer", "power": 1})


def paper_example_atoms(k: int) -> list[tuple[str, int, int]]:
    """Atom labels of S_k: ("J", k, l) then ("D", j, index) by j, index."""
    labels = [("J", k, l) for l in range(2 ** k)]
    for j in range(1, k):
        labels.extend(("D", j, i) for i in range(3 * 2 ** j))
    return labels


def _example_level(k: int) -> SystemLevel:
    labels = paper_example_atoms(k)
    index = {lab: i for i, lab in enumerate(labels)}
    geoms, pi, periods, rigid = [], [], [], set()
    for i, (kind, j, l) in enumerate(labels):
        if kind == "J":
            geoms.append(j_interval(j, l))
            pi.append(index[("J", j, (l + 1) % 2 ** j)])
            periods.append(frozenset({3 * 2 ** j}))
        else:
            base, c = l % 2 ** j, l // 2 ** j
            geoms.append(gap_piece(j_interval(j, base), c))
            pi.append(index[("D", j, (l + 1) % (3 * 2 ** j))])
            periods.append(frozenset({3 * 2 ** j}))
            rigid.add(i)
    model = interval_model(geoms, level=k)
    return SystemLevel(model, tuple(pi), tuple(periods), frozenset(rigid), frozenset(rigid))


def _example_parent(k: int) -> tuple[int, ...]:
    """Parent map from S_{k+1} to S_k."""
    coarse = {lab: i for i, lab in enumerate(paper_example_atoms(k))}
    out = []
    for kind, j, l in paper_example_atoms(k + 1):
        if kind == "J":
            out.append(coarse[("J", k, l % 2 ** k)])
        elif j < k:
            out.append(coarse[("D", j, l)])
        else:
            out.append(coarse[("J", k, l % 2 ** k)])
    return tuple(out)


def build_paper_example(K: int) -> SystemFamily:
    """The modified odometer with dense periodic orbits, levels 1..K."""
    if K < 2:
        raise ConstructionError("the example needs level K >= 2")
    levels = tuple(_example_level(k) for k in range(1, K + 1))
    parents = tuple(_example_parent(k) for k in range(1, K))
    return SystemFamily(levels, parents, {"system": "paper-example", "power": 1})


# --------------------------------------------------------------------------
# identity and rigid families


def build_identity(model: FiniteModel) -> SystemLevel:
    n = model.n
    return SystemLevel(model, tuple(range(n)), tuple(frozenset({1}) for _ in range(n)),
                       frozenset(range(n)), frozenset(range(n)))


def identity_model(n: int) -> FiniteModel:
    """n Cantor-type intervals [2i/(2n-1), (2i+1)/(2n-1)]."""
    d = 2 * n - 1
    return interval_model(Interval(Fraction(2 * i, d), Fraction(2 * i + 1, d)) for i in range(n))


def rigid_refinement_family(base: SystemLevel, K: int) -> SystemFamily:
    """Refine a rigid isometric system ternarily, K levels deep.

    Every atom must be rigid and isometric (pieces permuted by translations),
    so sub-pieces are carried to the corresponding sub-pieces.
    """
    if set(base.rigid) != set(range(base.n)) or set(base.isometric) != set(range(base.n)):
        raise ConstructionError("rigid refinement needs a rigid isometric system")
    if base.model.metric_kind != INTERVAL:
        raise ConstructionError("rigid refinement needs real geometry")
    lengths = base.cycle_lengths()
    labels = [(a, ()) for a in range(base.n)]
    geoms = [atom.geometry for atom in base.model.atoms]
    levels = [base]
    parents = []
    for k in range(2, K + 1):
        new_labels, new_geoms, parent = [], [], []
        for idx, ((a, addr), g) in enumerate(zip(labels, geoms)):
            for s, child in enumerate(ternary_children(g)):
                new_labels.append((a, addr + (s,)))
                new_geoms.append(child)
                parent.append(idx)
        index = {lab: i for i, lab in enumerate(new_labels)}
        pi = tuple(index[(base.pi[a], addr)] for a, addr in new_labels)
        model = interval_model(new_geoms, level=k)
        n = len(new_labels)
        periods = tuple(frozenset({lengths[a]}) for a, _ in new_labels)
        levels.append(SystemLevel(model, pi, periods, frozenset(range(n)), frozenset(range(n))))
        parents.append(tuple(parent))
        labels, geoms = new_labels, new_geoms
    recipe = {"system": "rigid-refinement", "base": base.to_json(), "power": 1}
    return SystemFamily(tuple(levels), tuple(parents), recipe)


def gamma_orbits_system(J: int) -> SystemLevel:
    """Disjoint union of the periodic orbits Gamma_1..Gamma_J, rigid translations."""
    geoms, pi, start = [], [], 0
    for j in range(1, J + 1):
        size = 3 * 2 ** j
        for i in range(size):
            base, c = i % 2 ** j, i // 2 ** j
            geoms.append(gap_piece(j_interval(j, base), c))
            pi.append(start + (i + 1) % size)
        start += size
    order = sorted(range(len(geoms)), key=lambda i: geoms[i].offset)
    rank = {old: new for new, old in enumerate(order)}
    geoms = [geoms[i] for i in order]
    pi = [rank[pi[old]] for old in order]
    n = len(geoms)
    sys = SystemLevel(interval_model(geoms), tuple(pi), None, frozenset(range(n)), frozenset(range(n)))
    return sys


# --------------------------------------------------------------------------
# combinators


def _power_periods(qs: frozenset, n: int) -> frozenset:
    return _minimal_divisors(q // math.gcd(q, abs(n)) for q in qs)


def level_power(sys: SystemLevel, n: int) -> SystemLevel:
    if n == 0:
        raise ValueError("power must be nonzero")
    pi = tuple(sys.iterate(a, n) for a in range(sys.n))
    periods = tuple(_power_periods(q, n) for q in sys.min_periods)
    return SystemLevel(sys.model, pi, periods, sys.rigid, sys.isometric)


def system_power(sys, n: int):
    """f^n for a level or a family; inverse powers allowed."""
    if isinstance(sys, SystemLevel):
        return level_power(sys, n)
    recipe = dict(sys.recipe) if sys.recipe else None
    if recipe is not None:
        recipe["power"] = recipe.get("power", 1) * n
    return SystemFamily(tuple(level_power(l, n) for l in sys.levels), sys.parents, recipe)


def extend_family(family: SystemFamily, K: int) -> SystemFamily:
    """Rebuild the family from its recipe with K levels."""
    if family.depth >= K:
        return family
    recipe = family.recipe
    if recipe is None:
        raise RefinementNeeded("family has no recipe for deeper levels", K)
    kind = recipe["system"]
    if kind == "odometer":
        fam = build_odometer(_extend_chain(recipe["m"], K), K)
    elif kind == "paper-example":
        fam = build_paper_example(K)
    elif kind == "embed-binary-odometer":
        fam = embed_binary_odometer(K)
    elif kind == "rigid-refinement":
        fam = rigid_refinement_family(SystemLevel.from_json(recipe["base"]), K)
    else:
        raise RefinementNeeded(f"unknown recipe {kind!r}", K)
    power = recipe.get("power", 1)
    if power != 1:
        fam = system_power(fam, power)
    return fam


def _extend_chain(m: Sequence[int], K: int) -> list[int]:
    m = list(m)
    while len(m) < K:
        ratio = m[-1] // m[-2] if len(m) > 1 else m[-1]
        m.append(m[-1] * ratio)
    return m


# --------------------------------------------------------------------------
# swaps


def _xor(u: Sequence[int], v: Sequence[int]) -> tuple[int, ...]:
    return tuple((a + b) % 2 for a, b in zip(u, v))


def _word_dist(u: Sequence[int], v: Sequence[int]) -> Fraction:
    """dmax between same-length cylinders; 0 for identical words (same point)."""
    for j, (s, t) in enumerate(zip(u, v), start=1):
        if s != t:
            return Fraction(1, 2 ** j)
    return Fraction(0)


@dataclass(frozen=True)
class SwapInvolution:
    """Composition of XOR-masked cylinder swaps at one depth.

    Each stage maps [w] onto [w + mask] for its listed words and fixes every
    other cylinder; a stage is an involution.  ``stages`` are applied first
    to last, so a two-stage map is stage2 o stage1.
    """

    depth: int
    stages: tuple[tuple[tuple[tuple[int, ...], tuple[int, ...]], ...], ...]

    @property
    def masked_cylinders(self):
        return tuple(entry for stage in self.stages for entry in stage)

    def apply(self, word: Sequence[int]) -> tuple[int, ...]:
        word = tuple(word)
        head, tail = word[:self.depth], word[self.depth:]
        for stage in self.stages:
            table = dict(stage)
            mask = table.get(head)
            if mask is not None:
                head = _xor(head, mask)
        return head + tail

    def apply_inverse(self, word: Sequence[int]) -> tuple[int, ...]:
        return SwapInvolution(self.depth, tuple(reversed(self.stages))).apply(word)

    def moved_words(self) -> set[tuple[int, ...]]:
        words = {w for stage in self.stages for w, _ in stage}
        return {w for w in words if self.apply(w) != w}

    def stage_is_involution(self, index: int) -> bool:
        stage = SwapInvolution(self.depth, (self.stages[index],))
        return all(stage.apply(stage.apply(w)) == w for w, _ in self.stages[index])

    def is_involution(self) -> bool:
        words = {w for stage in self.stages for w, _ in stage}
        return all(self.apply(self.apply(w)) == w for w in words)

    def distance_to_identity(self) -> Fraction:
        """Exact D(phi, id): each moved cylinder is XOR-translated isometrically."""
        return max((_word_dist(w, self.apply(w)) for w in self.moved_words()), default=Fraction(0))

    def to_json(self) -> dict:
        return {"depth": self.depth,
                "stages": [[["".join(map(str, w)), "".join(map(str, m))] for w, m in stage]
                           for stage in self.stages]}

    @classmethod
    def from_json(cls, doc: dict) -> "SwapInvolution":
        return cls(doc["depth"], tuple(tuple((tuple(int(c) for c in w), tuple(int(c) for c in m))
                                             for w, m in stage) for stage in doc["stages"]))


def _stage(pairs: Sequence[tuple[tuple[int, ...], tuple[int, ...]]]):
    entries = []
    for a, b in pairs:
        w = _xor(a, b)
        entries.append((a, w))
        entries.append((b, w))
    return tuple(sorted(entries))


def involution_possible(pairs) -> bool:
    """Whether some involution sends a to b for every (a, b) in ``pairs``."""
    forward = {a: b for a, b in pairs if a != b}
    for a, b in forward.items():
        # targets are distinct (proper tuples); a target that is also a source must map back
        if b in forward and forward[b] != a:
            return False
    return True


def _fresh_near(word: tuple[int, ...], delta: Fraction, used: set) -> tuple[int, ...] | None:
    """Lowest unused word at dmax-distance < delta from ``word``."""
    K = len(word)
    j = 1
    while j <= K and Fraction(1, 2 ** j) >= delta:
        j += 1
    if j > K:
        return None
    prefix = word[:j - 1]
    free = K - len(prefix)
    for s in range(2 ** free):
        suffix = tuple((s >> (free - 1 - i)) & 1 for i in range(free))
        cand = prefix + suffix
        if cand not in used:
            return cand
    return None


def swap_homeomorphism(zeta: Sequence, eta: Sequence, delta, model: FiniteModel | None = None,
                       auto_refine: bool = True, max_depth: int = 64) -> SwapInvolution:
    """phi with phi(zeta_i) = eta_i and D(phi, id) < delta on binary cylinders.

    ``zeta``/``eta`` are atom ids of ``model`` or words.  Pairs that already
    agree are left fixed.  When the remaining atoms of zeta and eta are
    disjoint a single masked swap suffices; otherwise an intermediate tuple
    of fresh cylinders is routed through (two stages).  If no fresh cylinder
    is close enough the words are extended by zeros (their leftmost points)
    and the construction retried one level deeper.
    """
    delta = as_scalar(delta)

    def word_of(x):
        if model is not None and isinstance(x, int):
            return model.atoms[x].geometry.word
        return tuple(x)

    zeta = [word_of(x) for x in zeta]
    eta = [word_of(x) for x in eta]
    if len(zeta) != len(eta):
        raise PreconditionError("tuples must have the same length")
    if len(set(zeta)) != len(zeta) or len(set(eta)) != len(eta):
        raise PreconditionError("tuples must be proper (pairwise distinct)")
    if model is not None and (model.metric_kind != CYLINDER or any(r != 2 for r in model.radices)):
        raise PreconditionError("swap construction needs the binary cylinder space")
    depths = {len(w) for w in zeta + eta}
    if len(depths) > 1:
        raise PreconditionError("all cylinders must have one depth")
    depth = depths.pop() if depths else 0
    dn = max((_word_dist(a, b) for a, b in zip(zeta, eta)), default=Fraction(0))
    if dn >= delta:
        raise PreconditionError(f"d_n(zeta, eta) = {dn} is not below delta = {delta}")

    pairs = [(a, b) for a, b in zip(zeta, eta) if a != b]
    if not pairs:
        return SwapInvolution(depth, ())
    if involution_possible(pairs):
        # disjoint tuples, or overlaps that are themselves transpositions
        single = {tuple(sorted(p)) for p in pairs}
        return SwapInvolution(depth, (_stage(sorted(single)),))

    used = set(zeta) | set(eta)
    theta = []
    for a, _ in pairs:
        t = _fresh_near(a, delta, used)
        if t is None:
            if not auto_refine or depth >= max_depth:
                raise RefinementNeeded("no fresh cylinder close enough", depth + 1)
            ext = lambda w: tuple(w) + (0,)
            return swap_homeomorphism([ext(w) for w in zeta], [ext(w) for w in eta], delta,
                                      None, auto_refine, max_depth)
        used.add(t)
        theta.append(t)
    first = _stage([(a, t) for (a, _), t in zip(pairs, theta)])
    second = _stage([(t, b) for (_, b), t in zip(pairs, theta)])
    return SwapInvolution(depth, (first, second))


def swap_permutation(phi: SwapInvolution, model: FiniteModel) -> tuple[int, ...]:
    if model.level < phi.depth:
        raise PreconditionError("model is coarser than the swap depth")
    return tuple(model.index_of_word(phi.apply(a.geometry.word)) for a in model.atoms)


def transposition(n: int, pairs: Iterable[tuple[int, int]]) -> tuple[int, ...]:
    perm = list(range(n))
    for a, b in pairs:
        perm[a], perm[b] = perm[b], perm[a]
    return tuple(perm)


def perturb(sys, phi):
    """g = phi o f.  ``phi`` is a SwapInvolution or an atom permutation."""
    if isinstance(sys, SystemFamily):
        if not isinstance(phi, SwapInvolution):
            raise PreconditionError("families are perturbed by cylinder swaps")
        start = next((i for i, l in enumerate(sys.levels) if l.model.level >= phi.depth), None)
        if start is None:
            raise PreconditionError("swap deeper than the family")
        levels = tuple(perturb(l, phi) for l in sys.levels[start:])
        return SystemFamily(levels, sys.parents[start:], None)
    perm = swap_permutation(phi, sys.model) if isinstance(phi, SwapInvolution) else tuple(phi)
    if len(perm) != sys.n:
        raise PreconditionError("perturbation size does not match the model")
    pi = tuple(perm[sys.pi[a]] for a in range(sys.n))
    moved = frozenset(a for a in range(sys.n) if perm[a] != a)
    # the pointwise periodic structure of g inside its atoms is not tracked
    return SystemLevel(sys.model, pi, tuple(frozenset() for _ in pi), frozenset(), frozenset(),
                       periods_known=False, base=sys, moved=moved)


@dataclass(frozen=True)
class DistanceBounds:
    d_c0: tuple[Fraction, Fraction]
    d_c0_inverse: tuple[Fraction, Fraction]

    @property
    def D(self) -> tuple[Fraction, Fraction]:
        return (max(self.d_c0[0], self.d_c0_inverse[0]), max(self.d_c0[1], self.d_c0_inverse[1]))

    def to_json(self) -> dict:
        f = lambda p: [format_scalar(p[0]), format_scalar(p[1])]
        return {"d_c0": f(self.d_c0), "d_c0_inverse": f(self.d_c0_inverse), "D": f(self.D)}


def _level_of(sys):
    return sys.finest if isinstance(sys, SystemFamily) else sys


def system_distance(f: SystemLevel, g: SystemLevel) -> DistanceBounds:
    """Lower/upper bounds on d_C0(f, g), d_C0(f^-1, g^-1) and D(f, g)."""
    if f.model != g.model:
        raise ValueError("systems live on different models")
    linked = g.base is f or (g.base is not None and g.base.pi == f.pi and g.base.model == f.model)
    model = f.model

    def sweep(pf, pg, same):
        lo = hi = Fraction(0)
        for a in range(f.n):
            if same(a):
                continue
            x, y = model._pair(pf[a], pg[a])
            lo, hi = max(lo, x), max(hi, y)
        return lo, hi

    fwd = sweep(f.pi, g.pi, lambda a: linked and f.pi[a] not in g.moved)
    inv = sweep(f.pi_inverse, g.pi_inverse, lambda b: linked and b not in g.moved)
    return DistanceBounds(fwd, inv)
