"""Closed-form information and error figures for intercept-resend attacks.

Conventions: Alice picks uniformly from her vector pool, Bob and Eve pick
uniformly from the full basis list of the state set. Informations are in
units of the carrier dimension (bits for qubits, trits for qutrits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .exactnum import to_float
from .statespace import StateSet, multiplicities, overlap_prob


def xlogx(p: float, base: float) -> float:
    """p * log_base(p) with 0 log 0 = 0."""
    if p <= 0.0:
        return 0.0
    return p * math.log(p, base)


def bob_info(e_b: float, dimension: int) -> float:
    """Bob's mutual information with Alice for a symmetric error rate ``e_b``.

    Errors are spread evenly over the ``dimension - 1`` wrong symbols.
    """
    if not 0.0 <= e_b <= 1.0:
        raise ValueError(f"error rate {e_b} outside [0, 1]")
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    d = dimension
    info = 1.0 + xlogx(1.0 - e_b, d)
    if e_b > 0.0:
        info += e_b * math.log(e_b / (d - 1), d)
    return info


def mub_ire_metrics(dimension: int, n_bases: int) -> tuple[Fraction, Fraction]:
    """(Eve's information, Bob's error rate) for full IRE on mutually unbiased bases."""
    if n_bases < 2:
        raise ValueError("need at least two bases")
    i_eve = Fraction(1, n_bases)
    e_bob = (1 - Fraction(1, n_bases)) * (1 - Fraction(1, dimension))
    return i_eve, e_bob


def _pool(s: StateSet, alice_pool: Sequence[int] | None) -> tuple[int, ...]:
    return tuple(s.primary if alice_pool is None else alice_pool)


def probability_matrix(s: StateSet) -> list[list[Fraction]]:
    n = len(s.vectors)
    P = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        P[i][i] = Fraction(1)
        for j in range(i + 1, n):
            P[i][j] = P[j][i] = overlap_prob(s.vectors[i], s.vectors[j])
    return P


def bob_correct_prob(s: StateSet, alice_pool: Sequence[int] | None = None) -> Fraction:
    """Bob's chance of reading Alice's symbol on a sifted round under full IRE.

    Averaged uniformly over Alice's vectors and Eve's bases; a vector found by
    Eve is weighted by how many bases contain it.
    """
    pool = _pool(s, alice_pool)
    P = probability_matrix(s)
    M = multiplicities(s)
    total = sum(
        (M[mu] * P[mu][j] ** 2 for j in pool for mu in range(len(s.vectors))),
        Fraction(0),
    )
    return total / (len(pool) * len(s.bases))


def eve_info_ire(s: StateSet, alice_pool: Sequence[int] | None = None) -> float:
    """Eve's information per sifted symbol under full IRE.

    Every basis member has prior 1/d; terms for vectors outside Alice's pool
    are dropped.
    """
    pool = _pool(s, alice_pool)
    P = probability_matrix(s)
    M = multiplicities(s)
    d = s.dimension
    acc = 0.0
    for j in pool:
        for mu in range(len(s.vectors)):
            acc += M[j] * M[mu] * xlogx(to_float(P[mu][j]), d)
    return 1.0 + acc / (d * len(s.bases) ** 2)


def passive_info(s: StateSet | None = None, alice_pool: Sequence[int] | None = None) -> float:
    """Eve's information from basis announcements alone.

    When Bob's basis holds fewer than ``d`` pool vectors, confirmation tells
    Eve the symbol is one of those, dropping her entropy to log_d(count).
    Defaults to the 13-basis set with the 12 primary vectors.
    """
    if s is None:
        from .statespace import build_table1

        s = build_table1()
    pool = set(_pool(s, alice_pool))
    d = s.dimension
    gains = [1.0 - math.log(sum(k in pool for k in b.indices), d) for b in s.bases]
    return sum(gains) / len(s.bases)


def passive_info_sifted(s: StateSet, alice_pool: Sequence[int] | None = None) -> float:
    """Announcement-only information averaged over sifted rounds rather than over bases."""
    pool = set(_pool(s, alice_pool))
    d = s.dimension
    counts = [sum(k in pool for k in b.indices) for b in s.bases]
    return sum(c * (1.0 - math.log(c, d)) for c in counts if c) / sum(counts)


def passive_gain(candidates: int, dimension: int = 3) -> float:
    return 1.0 - math.log(candidates, dimension)


# ---------------------------------------------------------------------------
# brute-force oracles over explicit (Bob basis, Alice vector, Eve basis, Eve outcome) tuples


@dataclass(frozen=True)
class IreEnumeration:
    vector_averaged_correct: Fraction
    sifted_correct: Fraction
    eve_info_prior_third: float
    eve_info_bayes: float


def enumerate_ire(s: StateSet, alice_pool: Sequence[int] | None = None) -> IreEnumeration:
    """Walk every tuple of the full-IRE process and accumulate the figures directly.

    ``vector_averaged_correct`` weights Alice's vectors uniformly on sifted
    rounds; ``sifted_correct`` weights them by how often they survive sifting.
    Eve's information is scored as the expected surprisal of Alice's actual
    symbol under Eve's posterior, with either a fixed 1/d prior per basis
    member or the exact sifted prior.
    """
    pool = _pool(s, alice_pool)
    in_pool = set(pool)
    d = s.dimension
    nb = len(s.bases)
    vecs = s.vectors
    cache: dict[tuple[int, int], Fraction] = {}

    def overlap(a: int, b: int) -> Fraction:
        # memoized per call; deliberately independent of probability_matrix
        if (a, b) not in cache:
            cache[a, b] = overlap_prob(vecs[a], vecs[b])
        return cache[a, b]

    per_vector_correct: dict[int, Fraction] = {}
    sift_weight = Fraction(0)
    sift_correct = Fraction(0)
    surprisal_third = 0.0
    surprisal_bayes = 0.0
    for bob in s.bases:
        members = [k for k in bob.indices if k in in_pool]
        for j in members:
            p_alice = Fraction(1, len(pool))
            for eve in s.bases:
                for mu in eve.indices:
                    p_mu = overlap(j, mu)
                    if p_mu == 0:
                        continue
                    # Eve resends vecs[mu]; Bob measures in `bob`, which holds j
                    bob_ok = overlap(mu, j)
                    w = p_alice * Fraction(1, nb) * Fraction(1, nb) * p_mu
                    sift_weight += w
                    sift_correct += w * bob_ok
                    likes = {k: overlap(mu, k) for k in members}
                    z = sum(likes.values())
                    surprisal_bayes += to_float(w) * -math.log(to_float(likes[j] / z), d)
                    wt = Fraction(1, nb) * Fraction(1, d) * Fraction(1, nb) * p_mu
                    surprisal_third += to_float(wt) * -math.log(to_float(likes[j]), d)
    for j in pool:
        containing = [b for b in s.bases if j in b.indices]
        acc = Fraction(0)
        for bob in containing:
            for eve in s.bases:
                for mu in eve.indices:
                    p = overlap(j, mu)
                    acc += Fraction(1, len(containing)) * Fraction(1, nb) * p * p
        per_vector_correct[j] = acc
    vec_avg = sum(per_vector_correct.values(), Fraction(0)) / len(pool)
    return IreEnumeration(
        vector_averaged_correct=vec_avg,
        sifted_correct=sift_correct / sift_weight,
        eve_info_prior_third=1.0 - surprisal_third,
        eve_info_bayes=1.0 - surprisal_bayes / to_float(sift_weight),
    )


# ---------------------------------------------------------------------------
# Table II rows, breakeven and sweeps


@dataclass(frozen=True)
class MetricsRow:
    protocol: str
    unit: str
    i_eve: float
    i_bob: float
    e_bob: float
    x_breakeven: float
    passive_floor: float = 0.0
    dimension: int = 3

    def as_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "unit": self.unit,
            "i_eve": self.i_eve,
            "i_bob": self.i_bob,
            "e_bob": self.e_bob,
            "x_breakeven": self.x_breakeven,
        }

    def eve_at(self, x: float) -> float:
        return x * self.i_eve + (1.0 - x) * self.passive_floor

    def bob_at(self, x: float) -> float:
        return bob_info(x * self.e_bob, self.dimension)


class NoBreakevenError(ValueError):
    pass


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9, max_iter: int = 200) -> float:
    """Root of ``f`` on [lo, hi] by bisection; ``f(lo)`` and ``f(hi)`` must differ in sign."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0) == (fhi < 0):
        raise NoBreakevenError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo < tol:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def breakeven_x(
    i_eve_active: float,
    e_bob: float,
    dimension: int,
    passive_floor: float = 0.0,
    tol: float = 1e-13,
) -> float:
    """Intercepted fraction at which Eve's and Bob's informations coincide."""
    if i_eve_active <= 0:
        raise ValueError("Eve's active information must be positive")

    def gap(x: float) -> float:
        return x * i_eve_active + (1.0 - x) * passive_floor - bob_info(x * e_bob, dimension)

    grid = np.linspace(0.0, 1.0, 1001)
    values = np.array([gap(x) for x in grid])
    if np.any(np.diff(values) <= 0):
        raise NoBreakevenError("gap is not increasing on [0, 1]")
    return bisect(gap, 0.0, 1.0, tol=tol)


PROTOCOLS = ("bb84-2basis", "six-state-3basis", "mub4-qutrit", "b13-v12", "b13-v21")


def protocol_state_set(name: str) -> tuple[StateSet, tuple[int, ...]]:
    """State set and Alice's vector pool for a protocol name."""
    from .statespace import build_mub4, build_qubit_set, build_table1

    if name == "bb84-2basis":
        s = build_qubit_set(2)
    elif name == "six-state-3basis":
        s = build_qubit_set(3)
    elif name == "mub4-qutrit":
        s = build_mub4()
    elif name == "b13-v12":
        s = build_table1()
        return s, s.primary
    elif name == "b13-v21":
        s = build_table1()
        return s, tuple(range(len(s.vectors)))
    else:
        raise KeyError(f"unknown protocol {name!r}")
    return s, tuple(range(len(s.vectors)))


def metrics_row(name: str) -> MetricsRow:
    s, pool = protocol_state_set(name)
    d = s.dimension
    e_bob = to_float(1 - bob_correct_prob(s, pool))
    i_eve = eve_info_ire(s, pool)
    floor = passive_info(s, pool)
    return MetricsRow(
        protocol=name,
        unit="bit" if d == 2 else "trit",
        i_eve=i_eve,
        i_bob=bob_info(e_bob, d),
        e_bob=e_bob,
        x_breakeven=breakeven_x(i_eve, e_bob, d, floor),
        passive_floor=floor,
        dimension=d,
    )


def metrics_table() -> list[MetricsRow]:
    return [metrics_row(name) for name in PROTOCOLS]


@dataclass(frozen=True)
class SweepSeries:
    protocol: str
    unit: str
    points: tuple[tuple[float, float, float], ...]
    x_breakeven: float


def sweep(protocol: str | MetricsRow, n_points: int) -> SweepSeries:
    """Eve's and Bob's informations on a uniform grid of intercepted fractions."""
    if n_points < 2:
        raise ValueError("need at least two points")
    row = protocol if isinstance(protocol, MetricsRow) else metrics_row(protocol)
    xs = np.linspace(0.0, 1.0, n_points)
    points = tuple((float(x), row.eve_at(float(x)), row.bob_at(float(x))) for x in xs)
    return SweepSeries(row.protocol, row.unit, points, row.x_breakeven)
