"""Exact clopen partitions of zero-dimensional spaces.

Two metric families are supported:

* ``cylinder-sup``: sequence space with d(x, y) = sup_i 2^-i [x_i != y_i].
  Atoms are cylinders [w] of one common word length.
* ``interval``: subsets of [0, 1] with the absolute-value metric.  An
  ``Interval(lo, hi)`` atom stands for a Cantor-type set inside [lo, hi]
  that contains both endpoints, a ``ScaledCantor(a, b)`` atom is a + b*D for
  D the ternary Cantor set.

All quantities are :class:`fractions.Fraction`.  Every atom pair carries a
lower bound ``dmin`` and an upper bound ``dmax`` on point distances.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

Scalar = Fraction

CYLINDER = "cylinder-sup"
INTERVAL = "interval"


def as_scalar(value) -> Fraction:
    """Coerce ints, Fractions and "num/den" strings; floats are refused."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise ValueError(f"not an exact rational: {value!r}")
        return Fraction(text)
    raise TypeError(f"refusing inexact scalar {value!r} ({type(value).__name__})")


def format_scalar(value: Fraction) -> str:
    value = as_scalar(value)
    return f"{value.numerator}/{value.denominator}"


def pow2(exponent: int) -> Fraction:
    return Fraction(2) ** exponent


# --------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class Cylinder:
    word: tuple[int, ...]

    kind = "cylinder"

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(s) for s in self.word))
        if any(s < 0 for s in self.word):
            raise ValueError("cylinder symbols are non-negative")

    def diameter(self) -> Fraction:
        return pow2(-(len(self.word) + 1))

    def to_json(self) -> dict:
        return {"kind": "cylinder", "word": "".join(map(str, self.word))
                if all(s < 10 for s in self.word) else list(self.word)}


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    kind = "interval"

    def __post_init__(self):
        object.__setattr__(self, "lo", as_scalar(self.lo))
        object.__setattr__(self, "hi", as_scalar(self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")

    def hull(self) -> tuple[Fraction, Fraction]:
        return self.lo, self.hi

    def diameter(self) -> Fraction:
        return self.hi - self.lo

    def to_json(self) -> dict:
        return {"kind": "interval", "lo": format_scalar(self.lo), "hi": format_scalar(self.hi)}


@dataclass(frozen=True)
class ScaledCantor:
    offset: Fraction
    scale: Fraction

    kind = "scaled-cantor"

    def __post_init__(self):
        object.__setattr__(self, "offset", as_scalar(self.offset))
        object.__setattr__(self, "scale", as_scalar(self.scale))
        if self.scale <= 0:
            raise ValueError("ScaledCantor needs a positive scale")

    def hull(self) -> tuple[Fraction, Fraction]:
        return self.offset, self.offset + self.scale

    def diameter(self) -> Fraction:
        return self.scale

    def to_json(self) -> dict:
        return {"kind": "scaled-cantor", "offset": format_scalar(self.offset),
                "scale": format_scalar(self.scale)}


Geometry = Union[Cylinder, Interval, ScaledCantor]


def geometry_from_json(doc: dict) -> Geometry:
    kind = doc["kind"]
    if kind == "cylinder":
        word = doc["word"]
        if isinstance(word, str):
            word = [int(c) for c in word]
        return Cylinder(tuple(word))
    if kind == "interval":
        return Interval(as_scalar(doc["lo"]), as_scalar(doc["hi"]))
    if kind == "scaled-cantor":
        return ScaledCantor(as_scalar(doc["offset"]), as_scalar(doc["scale"]))
    raise ValueError(f"unknown geometry kind {kind!r}")


def ternary_children(geom: Geometry) -> tuple[Geometry, Geometry]:
    """Left and right thirds; the Cantor structure of the piece is preserved."""
    if isinstance(geom, Interval):
        a, b = geom.lo, geom.hi
        return Interval(a, (2 * a + b) / 3), Interval((a + 2 * b) / 3, b)
    if isinstance(geom, ScaledCantor):
        third = geom.scale / 3
        return (ScaledCantor(geom.offset, third),
                ScaledCantor(geom.offset + 2 * third, third))
    raise TypeError("only real geometries have ternary children")


@dataclass(frozen=True)
class Atom:
    id: int
    geometry: Geometry
    diameter: Fraction = None

    def __post_init__(self):
        if self.diameter is None:
            object.__setattr__(self, "diameter", self.geometry.diameter())
        else:
            object.__setattr__(self, "diameter", as_scalar(self.diameter))

    def representative(self) -> Union[Fraction, tuple[int, ...]]:
        """Leftmost point; display only."""
        g = self.geometry
        if isinstance(g, Cylinder):
            return g.word
        return g.hull()[0]


# --------------------------------------------------------------------------
# metric between atoms


def geometry_metric(a: Geometry, b: Geometry) -> tuple[Fraction, Fraction]:
    if isinstance(a, Cylinder) != isinstance(b, Cylinder):
        raise ValueError("cylinder and interval geometries live in different spaces")
    if isinstance(a, Cylinder):
        u, v = a.word, b.word
        for j, (s, t) in enumerate(zip(u, v), start=1):
            if s != t:
                d = pow2(-j)
                return d, d
        # nested (or equal) cylinders
        return Fraction(0), pow2(-(min(len(u), len(v)) + 1))
    if a == b:
        return Fraction(0), a.diameter()
    lo1, hi1 = a.hull()
    lo2, hi2 = b.hull()
    far = max(hi2 - lo1, hi1 - lo2)
    if hi1 < lo2:
        return lo2 - hi1, far
    if hi2 < lo1:
        return lo1 - hi2, far
    # overlapping hulls: 0 is still a valid lower bound
    return Fraction(0), far


def atom_metric(a: Atom, b: Atom) -> tuple[Fraction, Fraction]:
    """Exact (inf, sup) of point distances between two atoms."""
    if a.id == b.id and a.geometry == b.geometry:
        return Fraction(0), a.diameter
    return geometry_metric(a.geometry, b.geometry)


# --------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class FiniteModel:
    """A clopen partition at one resolution level.

    ``dmin``/``dmax`` are evaluated lazily from geometry unless explicit
    tables are supplied (used to inject faulty tables in tests).
    """

    level: int
    metric_kind: str
    atoms: tuple[Atom, ...]
    radices: tuple[int, ...] | None = None
    tables: tuple | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if self.metric_kind not in (CYLINDER, INTERVAL):
            raise ValueError(f"unknown metric kind {self.metric_kind!r}")
        for i, atom in enumerate(self.atoms):
            if atom.id != i:
                raise ValueError("atom ids must be 0..n-1 in order")
        if self.metric_kind == CYLINDER and self.radices is None:
            object.__setattr__(self, "radices", (2,) * self.level)

    def __len__(self) -> int:
        return len(self.atoms)

    def __hash__(self):
        return hash((self.level, self.metric_kind, self.atoms))

    @property
    def n(self) -> int:
        return len(self.atoms)

    def _pair(self, i: int, j: int) -> tuple[Fraction, Fraction]:
        if self.tables is not None:
            return self.tables[0][i][j], self.tables[1][i][j]
        key = (i, j) if i <= j else (j, i)
        cache = self._cache.setdefault("pairs", {})
        val = cache.get(key)
        if val is None:
            val = atom_metric(self.atoms[key[0]], self.atoms[key[1]])
            cache[key] = val
        return val

    def dmin(self, i: int, j: int) -> Fraction:
        return self._pair(i, j)[0]

    def dmax(self, i: int, j: int) -> Fraction:
        return self._pair(i, j)[1]

    def dmin_table(self) -> list[list[Fraction]]:
        return [[self.dmin(i, j) for j in range(self.n)] for i in range(self.n)]

    def dmax_table(self) -> list[list[Fraction]]:
        return [[self.dmax(i, j) for j in range(self.n)] for i in range(self.n)]

    @property
    def mesh(self) -> Fraction:
        return max(a.diameter for a in self.atoms)

    @property
    def min_gap(self) -> Fraction | None:
        """Smallest dmin between distinct atoms; None for a one-atom model."""
        if "min_gap" not in self._cache:
            if self.n < 2:
                val = None
            elif self.metric_kind == CYLINDER and self.tables is None:
                val = pow2(-self.level)
            else:
                val = min(self.dmin(i, j) for i in range(self.n) for j in range(i + 1, self.n))
            self._cache["min_gap"] = val
        return self._cache["min_gap"]

    @property
    def diameter(self) -> Fraction:
        return max(self.dmax(i, j) for i in range(self.n) for j in range(i, self.n))

    def index_of_word(self, word: Sequence[int]) -> int:
        lookup = self._cache.get("words")
        if lookup is None:
            lookup = {a.geometry.word: a.id for a in self.atoms}
            self._cache["words"] = lookup
        return lookup[tuple(word)]

    def with_tables(self, dmin, dmax) -> "FiniteModel":
        return FiniteModel(self.level, self.metric_kind, self.atoms, self.radices,
                           (tuple(map(tuple, dmin)), tuple(map(tuple, dmax))))

    def to_json(self) -> dict:
        doc = {
            "level": self.level,
            "metric_kind": self.metric_kind,
            "atoms": [{"id": a.id, "geometry": a.geometry.to_json(),
                       "diameter": format_scalar(a.diameter)} for a in self.atoms],
        }
        if self.metric_kind == CYLINDER and any(r != 2 for r in self.radices):
            doc["radices"] = list(self.radices)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "FiniteModel":
        atoms = tuple(Atom(int(a["id"]), geometry_from_json(a["geometry"]),
                           as_scalar(a["diameter"]) if "diameter" in a else None)
                      for a in doc["atoms"])
        radices = tuple(doc["radices"]) if "radices" in doc else None
        return cls(int(doc["level"]), doc["metric_kind"], atoms, radices)


def cylinder_model(level: int, radices: Sequence[int] | None = None) -> FiniteModel:
    """All cylinders of length ``level`` in lexicographic order."""
    radices = tuple(radices) if radices is not None else (2,) * level
    words = [()]
    for r in radices:
        words = [w + (s,) for w in words for s in range(r)]
    atoms = tuple(Atom(i, Cylinder(w)) for i, w in enumerate(words))
    return FiniteModel(level, CYLINDER, atoms, radices)


def interval_model(geometries: Iterable[Geometry], level: int = 1) -> FiniteModel:
    atoms = tuple(Atom(i, g) for i, g in enumerate(geometries))
    return FiniteModel(level, INTERVAL, atoms)


def random_interval_model(rng: random.Random, n: int, denominator: int = 720) -> FiniteModel:
    """n Cantor-type interval atoms, one per slot of width 1/n.

    Offsets and lengths are chosen so that every atom is shorter than every
    gap, which leaves room for perturbations below the separation scale.
    """
    w = Fraction(1, n)
    geoms = []
    for i in range(n):
        off = w * Fraction(rng.randint(denominator // 6, denominator // 3), denominator)
        length = w * Fraction(rng.randint(denominator // 8, denominator // 3), denominator)
        lo = i * w + off
        geoms.append(Interval(lo, lo + length))
    return interval_model(geoms)


# --------------------------------------------------------------------------
# validation and thresholds


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def add(self, message: str):
        self.violations.append(message)


def validate_partition(model: FiniteModel) -> ValidationReport:
    report = ValidationReport()
    atoms = model.atoms
    n = len(atoms)
    if n == 0:
        report.add("coverage: model has no atoms")
        return report
    for a in atoms:
        is_cyl = isinstance(a.geometry, Cylinder)
        if is_cyl != (model.metric_kind == CYLINDER):
            report.add(f"geometry: atom {a.id} kind does not match metric {model.metric_kind}")
            continue
        if a.diameter != a.geometry.diameter():
            report.add(f"diameter: atom {a.id} declares {a.diameter}, geometry gives {a.geometry.diameter()}")
        if is_cyl and len(a.geometry.word) != model.level:
            report.add(f"geometry: atom {a.id} word length {len(a.geometry.word)} != level {model.level}")
    if report.violations:
        return report

    if model.metric_kind == CYLINDER:
        words = [a.geometry.word for a in atoms]
        seen = {}
        for a, w in zip(atoms, words):
            if w in seen:
                report.add(f"disjointness: atoms {seen[w]} and {a.id} are the same cylinder")
            seen[w] = a.id
            if any(s >= r for s, r in zip(w, model.radices)):
                report.add(f"geometry: atom {a.id} symbol outside alphabet")
        total = 1
        for r in model.radices:
            total *= r
        if len(seen) != total:
            report.add(f"coverage: {len(seen)} distinct cylinders, expected {total}")
    else:
        hulls = sorted((a.geometry.hull(), a.id) for a in atoms)
        for ((lo1, hi1), i), ((lo2, hi2), j) in zip(hulls, hulls[1:]):
            if not hi1 < lo2:
                report.add(f"disjointness: atoms {i} and {j} overlap")
        for (lo, hi), i in hulls:
            if lo < 0 or hi > 1:
                report.add(f"coverage: atom {i} leaves [0, 1]")

    for i in range(n):
        if model.dmin(i, i) != 0:
            report.add(f"table: dmin({i},{i}) != 0")
        if model.dmax(i, i) != atoms[i].diameter:
            report.add(f"table: dmax({i},{i}) != diameter")
        for j in range(n):
            lo, hi = model.dmin(i, j), model.dmax(i, j)
            if lo > hi:
                report.add(f"bound order: dmin({i},{j}) > dmax({i},{j})")
            if j > i and (lo != model.dmin(j, i) or hi != model.dmax(j, i)):
                report.add(f"symmetry: pair ({i},{j})")
    return report


def threshold_values(model: FiniteModel) -> list[Fraction]:
    """Sorted distinct dmin/dmax entries (the breakpoints of every verdict)."""
    cached = model._cache.get("thresholds")
    if cached is None:
        values = set()
        for i in range(model.n):
            for j in range(i, model.n):
                lo, hi = model._pair(i, j)
                values.add(lo)
                values.add(hi)
        cached = sorted(values)
        model._cache["thresholds"] = cached
    return list(cached)


def threshold_grid(model: FiniteModel) -> list[Fraction]:
    """Breakpoints plus midpoints; every verdict is constant between entries."""
    values = threshold_values(model)
    mids = [(a + b) / 2 for a, b in zip(values, values[1:])]
    return sorted(set(values) | set(mids))


def grid_below(grid: Sequence[Fraction], bound: Fraction) -> Fraction | None:
    """Largest grid value strictly below ``bound``."""
    best = None
    for v in grid:
        if v < bound:
            best = v
    return best


# --------------------------------------------------------------------------
# point sampling (testing aid)


def sample_point(geom: Geometry, rng: random.Random, depth: int = 12,
                 radices: Sequence[int] | None = None):
    """A concrete point of the atom at finite expansion depth."""
    if isinstance(geom, Cylinder):
        tail = []
        for k in range(len(geom.word), depth):
            r = radices[k] if radices is not None and k < len(radices) else 2
            tail.append(rng.randrange(r))
        return geom.word + tuple(tail)
    g = geom
    for _ in range(depth):
        g = ternary_children(g)[rng.randrange(2)]
    return g.hull()[rng.randrange(2)]


def point_distance(x, y) -> Fraction:
    if isinstance(x, tuple):
        for j, (s, t) in enumerate(zip(x, y), start=1):
            if s != t:
                return pow2(-j)
        return Fraction(0)
    return abs(x - y)
