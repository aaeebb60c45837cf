"""Seeded Monte Carlo simulation of prepare-measure-sift sessions with an eavesdropper.

Rounds are processed in fixed-size chunks. Chunk ``c`` draws from its own
generator seeded by ``(seed, c)``, so a session is reproducible bit for bit
whatever the number of worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .exactnum import to_float
from .infotheory import PROTOCOLS, protocol_state_set
from .statespace import Basis, StateSet, StateVector, overlap_prob

CHUNK_ROUNDS = 1 << 16

ALIASES = {
    "bb84": "bb84-2basis",
    "six-state": "six-state-3basis",
    "mub4": "mub4-qutrit",
    "b13-12": "b13-v12",
    "b13-21": "b13-v21",
}

EVE_KINDS = ("none", "intercept-resend", "passive-listen", "mixed")


def resolve_protocol(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in PROTOCOLS:
        raise KeyError(f"unknown protocol {name!r}; choose from {', '.join(PROTOCOLS)}")
    return name


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    state_set: StateSet
    alice_pool: tuple[int, ...]
    bob_bases: tuple[int, ...]

    def __post_init__(self) -> None:
        covered = {k for b in self.bob_bases for k in self.state_set.bases[b].indices}
        missing = [k for k in self.alice_pool if k not in covered]
        if missing:
            raise ValueError(f"pool vectors {missing} lie in none of Bob's bases")

    @classmethod
    def named(cls, name: str) -> "ProtocolSpec":
        name = resolve_protocol(name)
        s, pool = protocol_state_set(name)
        return cls(name, s, pool, tuple(range(len(s.bases))))

    @property
    def dimension(self) -> int:
        return self.state_set.dimension

    @property
    def unit(self) -> str:
        return "bit" if self.dimension == 2 else "trit"

    @cached_property
    def tables(self) -> "_Tables":
        return _Tables.build(self)


@dataclass(frozen=True)
class EveStrategy:
    kind: str = "none"
    intercept_fraction: float = 1.0
    eve_bases: tuple[int, ...] | None = None  # None: every basis of the state set

    def __post_init__(self) -> None:
        if self.kind not in EVE_KINDS:
            raise ValueError(f"unknown eavesdropping kind {self.kind!r}")
        if not 0.0 <= self.intercept_fraction <= 1.0:
            raise ValueError("intercept fraction must lie in [0, 1]")

    @property
    def effective_fraction(self) -> float:
        return self.intercept_fraction if self.kind in ("intercept-resend", "mixed") else 0.0

    @property
    def listens(self) -> bool:
        return self.kind in ("passive-listen", "mixed")


@dataclass(frozen=True)
class _Tables:
    """Float lookup tables derived once from the exact state set."""

    prob: np.ndarray  # prob[v, w] = overlap probability
    members: np.ndarray  # members[b] = vector indices of basis b, ordered by trit
    contains: np.ndarray  # contains[b, v]
    trit: np.ndarray
    pool: np.ndarray
    in_pool: np.ndarray
    bob_bases: np.ndarray

    @classmethod
    def build(cls, spec: ProtocolSpec) -> "_Tables":
        s = spec.state_set
        n = len(s.vectors)
        prob = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                prob[i, j] = to_float(overlap_prob(s.vectors[i], s.vectors[j]))
        members = np.array([b.indices for b in s.bases], dtype=np.int64)
        contains = np.zeros((len(s.bases), n), dtype=bool)
        for b, idx in enumerate(members):
            contains[b, idx] = True
        in_pool = np.zeros(n, dtype=bool)
        in_pool[list(spec.alice_pool)] = True
        return cls(
            prob=prob,
            members=members,
            contains=contains,
            trit=np.array([v.trit for v in s.vectors], dtype=np.int64),
            pool=np.array(spec.alice_pool, dtype=np.int64),
            in_pool=in_pool,
            bob_bases=np.array(spec.bob_bases, dtype=np.int64),
        )


def measure(state: StateVector, basis: Basis, rng: np.random.Generator) -> tuple[int, StateVector]:
    """Projective measurement of ``state`` in ``basis``; returns (position, collapsed vector)."""
    probs = np.array([to_float(overlap_prob(state, v)) for v in basis.vectors])
    k = int(rng.choice(len(probs), p=probs / probs.sum()))
    return k, basis.vectors[k]


def _sample_outcome(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cum[:, -1]
    k = (u[:, None] >= cum).sum(axis=1)
    return np.minimum(k, probs.shape[1] - 1)


@dataclass
class RoundBatch:
    """Per-round columns for a run of rounds."""

    alice: np.ndarray
    eve_basis: np.ndarray  # -1 when not intercepted
    eve_vector: np.ndarray  # -1 when not intercepted
    bob_basis: np.ndarray
    bob_vector: np.ndarray
    sifted: np.ndarray
    error: np.ndarray
    eve_entropy: np.ndarray  # Eve's posterior entropy over Alice's symbol, sifted rounds only
    eve_exact: np.ndarray
    alice_trit: np.ndarray
    bob_trit: np.ndarray

    def __len__(self) -> int:
        return len(self.alice)

    @property
    def intercepted(self) -> np.ndarray:
        return self.eve_vector >= 0


def simulate_batch(spec: ProtocolSpec, eve: EveStrategy, rng: np.random.Generator, n: int) -> RoundBatch:
    t = spec.tables
    d = spec.dimension
    alice = t.pool[rng.integers(len(t.pool), size=n)]

    x = eve.effective_fraction
    intercept = rng.random(n) < x if x > 0 else np.zeros(n, dtype=bool)
    eve_pool = t.members.shape[0] if eve.eve_bases is None else len(eve.eve_bases)
    eb = rng.integers(eve_pool, size=n)
    if eve.eve_bases is not None:
        eb = np.asarray(eve.eve_bases)[eb]
    eve_members = t.members[eb]
    mu = eve_members[np.arange(n), _sample_outcome(rng, t.prob[alice[:, None], eve_members])]
    sent = np.where(intercept, mu, alice)

    bb = t.bob_bases[rng.integers(len(t.bob_bases), size=n)]
    bob_members = t.members[bb]
    bob_vec = bob_members[np.arange(n), _sample_outcome(rng, t.prob[sent[:, None], bob_members])]

    sifted = t.contains[bb, alice]
    alice_trit = t.trit[alice]
    bob_trit = t.trit[bob_vec]
    error = sifted & (bob_trit != alice_trit)

    # Eve's posterior over the pool members of Bob's announced basis.
    cand = t.in_pool[bob_members].astype(float)
    listens = intercept | eve.listens
    like = np.where(intercept[:, None], t.prob[mu[:, None], bob_members], 1.0)
    post = cand * like
    with np.errstate(divide="ignore", invalid="ignore"):
        # all-zero rows only occur on unsifted rounds, which are masked below
        post = np.nan_to_num(post / post.sum(axis=1, keepdims=True))
        terms = np.where(post > 0, -post * np.log(post) / np.log(d), 0.0)
    entropy = np.where(listens, terms.sum(axis=1), 1.0)
    exact = listens & (post.max(axis=1) > 1.0 - 1e-12)
    entropy = np.where(sifted, entropy, 0.0)
    exact &= sifted

    return RoundBatch(
        alice=alice,
        eve_basis=np.where(intercept, eb, -1),
        eve_vector=np.where(intercept, mu, -1),
        bob_basis=bb,
        bob_vector=bob_vec,
        sifted=sifted,
        error=error,
        eve_entropy=entropy,
        eve_exact=exact,
        alice_trit=alice_trit,
        bob_trit=bob_trit,
    )


@dataclass(frozen=True)
class RoundRecord:
    alice_vector: int
    alice_trit: int
    eve_intercepted: bool
    eve_basis: int | None
    eve_vector: int | None
    bob_basis: int
    bob_vector: int
    bob_trit: int
    sifted: bool
    error: bool
    eve_posterior: dict[int, float]


def run_round(spec: ProtocolSpec, eve: EveStrategy, rng: np.random.Generator) -> RoundRecord:
    """One transmission. ``eve_posterior`` maps trit -> Eve's probability (sifted rounds only)."""
    b = simulate_batch(spec, eve, rng, 1)
    t = spec.tables
    posterior: dict[int, float] = {}
    if b.sifted[0]:
        members = t.members[b.bob_basis[0]]
        weights = []
        for k in members:
            w = float(t.in_pool[k])
            if b.eve_vector[0] >= 0:
                w *= t.prob[b.eve_vector[0], k]
            weights.append(w)
        total = sum(weights)
        posterior = {int(t.trit[k]): w / total for k, w in zip(members, weights)}
        if b.eve_vector[0] < 0 and not eve.listens:
            posterior = {trit: 1.0 / spec.dimension for trit in range(spec.dimension)}
    return RoundRecord(
        alice_vector=int(b.alice[0]),
        alice_trit=int(b.alice_trit[0]),
        eve_intercepted=bool(b.eve_vector[0] >= 0),
        eve_basis=int(b.eve_basis[0]) if b.eve_vector[0] >= 0 else None,
        eve_vector=int(b.eve_vector[0]) if b.eve_vector[0] >= 0 else None,
        bob_basis=int(b.bob_basis[0]),
        bob_vector=int(b.bob_vector[0]),
        bob_trit=int(b.bob_trit[0]),
        sifted=bool(b.sifted[0]),
        error=bool(b.error[0]),
        eve_posterior=posterior,
    )


@dataclass
class SessionStats:
    protocol: str
    eve_kind: str
    intercept_fraction: float
    rng_seed: int
    rounds_sent: int = 0
    rounds_sifted: int = 0
    bob_symbol_errors: int = 0
    eve_intercepts: int = 0
    eve_exact_knowledge: int = 0
    eve_posterior_entropy_sum: float = 0.0
    eve_posterior_entropy_sq_sum: float = 0.0
    sifted_by_vector: list[int] = field(default_factory=list)
    errors_by_vector: list[int] = field(default_factory=list)

    def add(self, other: "SessionStats") -> None:
        self.rounds_sent += other.rounds_sent
        self.rounds_sifted += other.rounds_sifted
        self.bob_symbol_errors += other.bob_symbol_errors
        self.eve_intercepts += other.eve_intercepts
        self.eve_exact_knowledge += other.eve_exact_knowledge
        self.eve_posterior_entropy_sum += other.eve_posterior_entropy_sum
        self.eve_posterior_entropy_sq_sum += other.eve_posterior_entropy_sq_sum
        if not self.sifted_by_vector:
            self.sifted_by_vector = [0] * len(other.sifted_by_vector)
            self.errors_by_vector = [0] * len(other.errors_by_vector)
        for k, (s, e) in enumerate(zip(other.sifted_by_vector, other.errors_by_vector)):
            self.sifted_by_vector[k] += s
            self.errors_by_vector[k] += e

    @property
    def sifting_rate(self) -> float:
        return self.rounds_sifted / self.rounds_sent

    @property
    def pooled_error_rate(self) -> float:
        """Errors over all sifted rounds."""
        return self.bob_symbol_errors / self.rounds_sifted if self.rounds_sifted else 0.0

    def pooled_error_se(self) -> float:
        p, n = self.pooled_error_rate, self.rounds_sifted
        return float(np.sqrt(p * (1 - p) / n)) if n else float("nan")

    def _per_vector(self) -> list[tuple[int, int]]:
        return [(s, e) for s, e in zip(self.sifted_by_vector, self.errors_by_vector) if s > 0]

    @property
    def error_rate(self) -> float:
        """Sifted error rate averaged uniformly over Alice's vectors."""
        rows = self._per_vector()
        return sum(e / s for s, e in rows) / len(rows) if rows else 0.0

    def error_rate_se(self) -> float:
        rows = self._per_vector()
        if not rows:
            return float("nan")
        var = sum((e / s) * (1 - e / s) / s for s, e in rows)
        return float(np.sqrt(var)) / len(rows)

    @property
    def eve_information(self) -> float:
        if not self.rounds_sifted:
            return 0.0
        return 1.0 - self.eve_posterior_entropy_sum / self.rounds_sifted

    def eve_information_se(self) -> float:
        n = self.rounds_sifted
        if n < 2:
            return float("nan")
        mean = self.eve_posterior_entropy_sum / n
        var = max(self.eve_posterior_entropy_sq_sum / n - mean * mean, 0.0)
        return float(np.sqrt(var / n))

    def as_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "eve_kind": self.eve_kind,
            "intercept_fraction": self.intercept_fraction,
            "rng_seed": self.rng_seed,
            "rounds_sent": self.rounds_sent,
            "rounds_sifted": self.rounds_sifted,
            "bob_symbol_errors": self.bob_symbol_errors,
            "eve_intercepts": self.eve_intercepts,
            "eve_exact_knowledge": self.eve_exact_knowledge,
            "eve_posterior_entropy_sum": self.eve_posterior_entropy_sum,
            "sifting_rate": self.sifting_rate,
            "error_rate": self.error_rate,
            "error_rate_se": self.error_rate_se(),
            "pooled_error_rate": self.pooled_error_rate,
            "pooled_error_se": self.pooled_error_se(),
            "eve_information": self.eve_information,
            "eve_information_se": self.eve_information_se(),
        }


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, chunk]))


def _chunks(rounds: int) -> list[tuple[int, int]]:
    return [(c, min(CHUNK_ROUNDS, rounds - c * CHUNK_ROUNDS)) for c in range(-(-rounds // CHUNK_ROUNDS))]


def iter_batches(spec: ProtocolSpec, eve: EveStrategy, rounds: int, seed: int) -> Iterable[RoundBatch]:
    for c, n in _chunks(rounds):
        yield simulate_batch(spec, eve, chunk_rng(seed, c), n)


def _summarize(spec: ProtocolSpec, eve: EveStrategy, seed: int, b: RoundBatch) -> SessionStats:
    nvec = len(spec.state_set.vectors)
    sift = b.sifted
    h = b.eve_entropy[sift]
    return SessionStats(
        protocol=spec.name,
        eve_kind=eve.kind,
        intercept_fraction=eve.intercept_fraction,
        rng_seed=seed,
        rounds_sent=len(b),
        rounds_sifted=int(sift.sum()),
        bob_symbol_errors=int(b.error.sum()),
        eve_intercepts=int(b.intercepted.sum()),
        eve_exact_knowledge=int(b.eve_exact.sum()),
        eve_posterior_entropy_sum=float(h.sum()),
        eve_posterior_entropy_sq_sum=float((h * h).sum()),
        sifted_by_vector=np.bincount(b.alice[sift], minlength=nvec).tolist(),
        errors_by_vector=np.bincount(b.alice[b.error], minlength=nvec).tolist(),
    )


def default_workers() -> int:
    env = os.environ.get("QKD3_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_session(
    spec: ProtocolSpec | str,
    eve: EveStrategy,
    rounds: int,
    seed: int,
    workers: int | None = None,
) -> SessionStats:
    """Simulate ``rounds`` transmissions. Results depend only on (spec, eve, rounds, seed)."""
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    if isinstance(spec, str):
        spec = ProtocolSpec.named(spec)
    spec.tables  # build once before threads share it
    workers = default_workers() if workers is None else max(1, workers)

    def one(chunk: tuple[int, int]) -> SessionStats:
        c, n = chunk
        return _summarize(spec, eve, seed, simulate_batch(spec, eve, chunk_rng(seed, c), n))

    chunks = _chunks(rounds)
    if workers == 1 or len(chunks) == 1:
        parts = [one(ch) for ch in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, chunks))
    total = SessionStats(spec.name, eve.kind, eve.intercept_fraction, seed)
    for part in parts:  # fixed merge order keeps float sums reproducible
        total.add(part)
    return total


def sifted_key(records: RoundBatch | Sequence[RoundBatch] | Sequence[RoundRecord]) -> tuple[str, str]:
    """Alice's and Bob's sifted symbol strings."""
    if isinstance(records, RoundBatch):
        records = [records]
    alice: list[str] = []
    bob: list[str] = []
    for r in records:
        if isinstance(r, RoundBatch):
            alice.append("".join(map(str, r.alice_trit[r.sifted].tolist())))
            bob.append("".join(map(str, r.bob_trit[r.sifted].tolist())))
        elif r.sifted:
            alice.append(str(r.alice_trit))
            bob.append(str(r.bob_trit))
    return "".join(alice), "".join(bob)


ROUND_CSV_HEADER = ("round", "sifted", "alice_trit", "bob_trit", "eve_intercepted", "eve_correct")


def round_rows(spec: ProtocolSpec, batches: Iterable[RoundBatch]) -> Iterable[tuple[int, ...]]:
    """Rows for the per-round CSV dump; ``eve_correct`` is 1 when Eve's symbol matched Alice's."""
    trit = spec.tables.trit
    offset = 0
    for b in batches:
        inter = b.intercepted
        eve_trit = np.where(inter, trit[np.maximum(b.eve_vector, 0)], -1)
        correct = inter & (eve_trit == b.alice_trit)
        cols = np.stack(
            [
                np.arange(offset, offset + len(b)),
                b.sifted.astype(int),
                b.alice_trit,
                b.bob_trit,
                inter.astype(int),
                correct.astype(int),
            ],
            axis=1,
        )
        yield from map(tuple, cols.tolist())
        offset += len(b)
