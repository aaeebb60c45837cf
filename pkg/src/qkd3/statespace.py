"""State geometry: mutually unbiased qutrit bases and the 21-vector set.

Vectors are kept unnormalized. Probabilities are always formed as
``|<u,v>|^2 / (|u|^2 |v|^2)``, which never leaves the rationals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .exactnum import ONE, OMEGA, OMEGA2, ZERO, Amp, ExactAmp, GaussAmp, inner

COLORS = ("green", "red", "blue")
COLOR_TRIT = {name: trit for trit, name in enumerate(COLORS)}


@dataclass(frozen=True)
class StateVector:
    components: tuple[Amp, ...]
    trit: int
    tag: str = ""

    def __post_init__(self) -> None:
        kind = GaussAmp if any(isinstance(c, GaussAmp) for c in self.components) else ExactAmp
        comps = tuple(kind.coerce(c) for c in self.components)
        if all(c.is_zero() for c in comps):
            raise ValueError("zero vector is not a state")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_ints(cls, ints: Sequence[int], trit: int, tag: str = "") -> "StateVector":
        return cls(tuple(ExactAmp(k) for k in ints), trit, tag)

    @property
    def dimension(self) -> int:
        return len(self.components)

    @property
    def color(self) -> str:
        return COLORS[self.trit]

    def norm_sq(self) -> Fraction:
        return sum((c.norm_sq() for c in self.components), Fraction(0))

    def scaled(self, factor: Amp | int) -> "StateVector":
        f = factor if isinstance(factor, (ExactAmp, GaussAmp)) else self.components[0].coerce(factor)
        return StateVector(tuple(f * c for c in self.components), self.trit, self.tag)

    def canonical(self) -> "StateVector":
        """Flip the overall sign so the first nonzero component has positive real part."""
        for c in self.components:
            if c.is_zero():
                continue
            if c.re < 0 or (c.re == 0 and _imag_sign(c) < 0):
                return self.scaled(-1)
            return self
        return self

    def label(self) -> str:
        if all(isinstance(c, ExactAmp) and c.im3 == 0 and c.re.denominator == 1 for c in self.components):
            return "(" + ",".join(str(c.re.numerator) for c in self.components) + ")"
        return "(" + ", ".join(repr(c) for c in self.components) + ")"


def _imag_sign(c: Amp) -> int:
    im = c.im3 if isinstance(c, ExactAmp) else c.im
    return (im > 0) - (im < 0)


def overlap_prob(u: StateVector, v: StateVector) -> Fraction:
    """Transition probability between the rays of ``u`` and ``v``."""
    nu, nv = u.norm_sq(), v.norm_sq()
    if nu == 0 or nv == 0:
        raise ValueError("overlap of a zero vector")
    return inner(u.components, v.components).norm_sq() / (nu * nv)


def orthogonal(u: StateVector, v: StateVector) -> bool:
    return inner(u.components, v.components).is_zero()


def same_ray(u: StateVector, v: StateVector) -> bool:
    return overlap_prob(u, v) == 1


@dataclass(frozen=True)
class Basis:
    """Three (or, for qubits, two) mutually orthogonal members of a :class:`StateSet`.

    ``indices`` point into the owning set's vector list. ``appended`` lists
    the positions within ``indices`` that are completion vectors rather
    than members of the primary vector pool.
    """

    vectors: tuple[StateVector, ...]
    indices: tuple[int, ...]
    appended: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        for a, b in combinations(self.vectors, 2):
            if not orthogonal(a, b):
                raise ValueError(f"basis members {a.label()} and {b.label()} are not orthogonal")
        trits = sorted(v.trit for v in self.vectors)
        if trits != list(range(len(self.vectors))):
            raise ValueError(f"basis trits {trits} are not a permutation")

    @property
    def complete(self) -> bool:
        return not self.appended

    def __contains__(self, index: int) -> bool:
        return index in self.indices


@dataclass(frozen=True)
class StateSet:
    name: str
    vectors: tuple[StateVector, ...]
    bases: tuple[Basis, ...]
    primary: tuple[int, ...] = field(default=())

    @property
    def dimension(self) -> int:
        return self.vectors[0].dimension

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return multiplicities(self)

    def index(self, v: StateVector) -> int:
        for k, w in enumerate(self.vectors):
            if same_ray(v, w):
                return k
        raise KeyError(v.label())


def _check_distinct(vectors: Sequence[StateVector]) -> None:
    for (i, a), (j, b) in combinations(enumerate(vectors), 2):
        if same_ray(a, b):
            raise ValueError(f"duplicate ray: vectors {i} and {j} are both {a.label()}")


def enumerate_bases(vectors: Sequence[StateVector]) -> list[tuple[int, ...]]:
    """All orthogonal d-tuples of ``vectors`` (as sorted index tuples), by brute force."""
    _check_distinct(vectors)
    d = vectors[0].dimension
    ortho = {
        (i, j)
        for i, j in combinations(range(len(vectors)), 2)
        if orthogonal(vectors[i], vectors[j])
    }
    return [
        combo
        for combo in combinations(range(len(vectors)), d)
        if all(pair in ortho for pair in combinations(combo, 2))
    ]


def orthogonal_pairs(vectors: Sequence[StateVector]) -> list[tuple[int, int]]:
    """Orthogonal pairs that are not contained in any orthogonal triple of ``vectors``."""
    triples = enumerate_bases(vectors)
    covered = {pair for t in triples for pair in combinations(t, 2)}
    return [
        (i, j)
        for i, j in combinations(range(len(vectors)), 2)
        if orthogonal(vectors[i], vectors[j]) and (i, j) not in covered
    ]


def multiplicities(s: StateSet) -> tuple[int, ...]:
    counts = [0] * len(s.vectors)
    for b in s.bases:
        for k in b.indices:
            counts[k] += 1
    return tuple(counts)


def _make_set(name: str, vectors: Sequence[StateVector], primary: Iterable[int] | None = None) -> StateSet:
    vectors = tuple(vectors)
    primary = tuple(range(len(vectors))) if primary is None else tuple(primary)
    bases = []
    for combo in enumerate_bases(vectors):
        # order members by trit so basis position j carries trit j
        combo = tuple(sorted(combo, key=lambda k: vectors[k].trit))
        appended = tuple(pos for pos, k in enumerate(combo) if k not in primary)
        bases.append(Basis(tuple(vectors[k] for k in combo), combo, appended))
    return StateSet(name, vectors, tuple(bases), primary)


# ---------------------------------------------------------------------------
# built-in sets


def fourier_basis_vectors(phases: Sequence[ExactAmp], tag: str) -> list[StateVector]:
    """The three cyclic shifts of ``phases``, labelled 0, 1, 2 by position."""
    vecs = []
    for shift in range(3):
        comps = tuple(phases[(k - shift) % 3] for k in range(3))
        vecs.append(StateVector(comps, shift, f"{tag}{shift}"))
    return vecs


def build_mub4() -> StateSet:
    """Computational basis plus three Fourier-type bases, pairwise unbiased."""
    vecs: list[StateVector] = []
    for k in range(3):
        comps = [ZERO] * 3
        comps[k] = ONE
        vecs.append(StateVector(tuple(comps), k, f"z{k}"))
    # discrete Fourier transform of the computational basis
    vecs += [
        StateVector((ONE, ONE, ONE), 0, "f0"),
        StateVector((ONE, OMEGA, OMEGA2), 1, "f1"),
        StateVector((ONE, OMEGA2, OMEGA), 2, "f2"),
    ]
    vecs += fourier_basis_vectors((OMEGA, ONE, ONE), "w")
    vecs += fourier_basis_vectors((OMEGA2, ONE, ONE), "v")
    return _make_set("mub4", vecs)


def build_qubit_set(n_bases: int) -> StateSet:
    """Two (Z, X) or three (Z, X, Y) mutually unbiased qubit bases."""
    if n_bases not in (2, 3):
        raise ValueError("qubit protocols use 2 or 3 bases")
    one, zero, i = GaussAmp(1), GaussAmp(0), GaussAmp(0, 1)
    table = [
        ((one, zero), (zero, one)),
        ((one, one), (one, -one)),
        ((one, i), (one, -i)),
    ]
    vecs = []
    for b, name in zip(range(n_bases), "zxy"):
        for bit, comps in enumerate(table[b]):
            vecs.append(StateVector(comps, bit, f"{name}{bit}"))
    return _make_set(f"qubit{n_bases}", vecs)


# Table of 21 unnormalized vectors. Rows are colors, columns as printed;
# columns 1-4 are the 12 primary vectors, 5-7 the nine completion vectors.
TABLE1 = {
    "green": [(0, 0, 1), (1, 0, 1), (0, -1, 1), (1, -1, 1), (1, -1, 2), (1, 1, 2), (2, -1, 1)],
    "red": [(1, 0, 0), (1, 1, 0), (1, 0, -1), (1, 1, -1), (2, 1, -1), (2, 1, 1), (1, 2, -1)],
    "blue": [(0, 1, 0), (0, 1, 1), (-1, 1, 0), (-1, 1, 1), (-1, 2, 1), (1, 2, 1), (-1, 1, 2)],
}
TABLE1_PRIMARY_COLUMNS = 4


def table1_vectors() -> list[StateVector]:
    """The 21 vectors, column by column (green, red, blue within a column)."""
    out = []
    for col in range(7):
        for color in COLORS:
            v = StateVector.from_ints(TABLE1[color][col], COLOR_TRIT[color], f"c{col + 1}:{color}")
            out.append(v.canonical())
    return out


def table1_column(tag: str) -> int:
    return int(tag.split(":")[0][1:])


def build_table1() -> StateSet:
    vecs = table1_vectors()
    return _make_set("table1", vecs, primary=range(3 * TABLE1_PRIMARY_COLUMNS))


def table1_primary_vectors() -> list[StateVector]:
    return table1_vectors()[: 3 * TABLE1_PRIMARY_COLUMNS]


# ---------------------------------------------------------------------------
# coloring checks


@dataclass
class ColoringReport:
    checks: dict[str, bool]
    violations: list[str]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


UNCOLORABLE_RAY = StateVector.from_ints((1, 1, 1), 0, "111")


def verify_coloring(s: StateSet, witness: StateVector | None = UNCOLORABLE_RAY) -> ColoringReport:
    """Check that orthogonality forces distinct colors throughout ``s``.

    With a ``witness`` ray (default (1,1,1)) also check that the rays of ``s``
    orthogonal to it form a basis using all colors, so the witness itself
    admits no color.
    """
    checks: dict[str, bool] = {}
    violations: list[str] = []
    vecs = s.vectors

    bad_pairs = [
        (i, j)
        for i, j in combinations(range(len(vecs)), 2)
        if orthogonal(vecs[i], vecs[j]) and vecs[i].trit == vecs[j].trit
    ]
    for i, j in bad_pairs:
        violations.append(
            f"orthogonal pair {vecs[i].label()} [{vecs[i].tag}] and {vecs[j].label()} "
            f"[{vecs[j].tag}] share color {vecs[i].color}"
        )
    checks["orthogonal-pairs-bicolored"] = not bad_pairs

    bad_bases = []
    for combo in enumerate_bases(vecs):
        if sorted(vecs[k].trit for k in combo) != list(range(s.dimension)):
            bad_bases.append(combo)
            violations.append("basis " + " ".join(vecs[k].label() for k in combo) + " is not tricolored")
    checks["bases-tricolored"] = not bad_bases

    if witness is not None and witness.dimension == s.dimension:
        perp = [k for k, v in enumerate(vecs) if orthogonal(witness, v)]
        colors = sorted(vecs[k].trit for k in perp)
        fine = colors == list(range(s.dimension)) and len(perp) == s.dimension
        checks["witness-uncolorable"] = fine
        if not fine:
            violations.append(
                f"rays orthogonal to {witness.label()}: "
                + ", ".join(f"{vecs[k].label()}:{vecs[k].color}" for k in perp)
            )
    return ColoringReport(checks, violations)


# ---------------------------------------------------------------------------
# serialization


def _amp_json(a: Amp) -> dict:
    if isinstance(a, GaussAmp):
        return {"re": [a.re.numerator, a.re.denominator], "im": [a.im.numerator, a.im.denominator]}
    return {"re": [a.re.numerator, a.re.denominator], "im3": [a.im3.numerator, a.im3.denominator]}


def _amp_from_json(d: dict) -> Amp:
    if "im" in d:
        return GaussAmp(Fraction(*d["re"]), Fraction(*d["im"]))
    return ExactAmp(Fraction(*d["re"]), Fraction(*d["im3"]))


def to_json(s: StateSet) -> dict:
    """Stable JSON schema.

    ``vectors[k].components`` holds one ``{"re": [num, den], "im3": [num, den]}``
    object per coordinate, meaning ``re + im3*sqrt(3)*i`` (qubit sets use
    ``"im"`` for a plain imaginary part).
    """
    mult = multiplicities(s)
    return {
        "schema": "qkd3.stateset/1",
        "name": s.name,
        "dimension": s.dimension,
        "vectors": [
            {
                "index": k,
                "tag": v.tag,
                "components": [_amp_json(c) for c in v.components],
                "color": v.color,
                "trit": v.trit,
                "multiplicity": mult[k],
                "primary": k in s.primary,
            }
            for k, v in enumerate(s.vectors)
        ],
        "bases": [
            {"members": list(b.indices), "appended": [b.indices[p] for p in b.appended]}
            for b in s.bases
        ],
    }


def from_json(data: dict) -> StateSet:
    """Rebuild a set from :func:`to_json` output.

    Bases are re-enumerated from the vectors; the ``bases`` field is not trusted.
    Colors are not validated here, so a badly colored set can be loaded and
    handed to :func:`verify_coloring`.
    """
    vecs = [
        StateVector(tuple(_amp_from_json(c) for c in v["components"]), COLOR_TRIT[v["color"]], v.get("tag", ""))
        for v in data["vectors"]
    ]
    primary = [v["index"] for v in data["vectors"] if v.get("primary", True)]
    bases = []
    for combo in enumerate_bases(vecs):
        try:
            combo = tuple(sorted(combo, key=lambda k: vecs[k].trit))
            appended = tuple(p for p, k in enumerate(combo) if k not in primary)
            bases.append(Basis(tuple(vecs[k] for k in combo), combo, appended))
        except ValueError:
            continue  # miscolored basis; reported by verify_coloring
    return StateSet(data.get("name", "custom"), tuple(vecs), tuple(bases), tuple(primary))
