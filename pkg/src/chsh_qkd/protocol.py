"""Protocol sessions: random inputs, box invocation, sifting, CHSH check and raw key."""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .boxes import AliceInput, BobInput, BoxPair
from .quantum import OUTCOME_PAIRS
from .seeding import stream
from .stats import (
    HONEST_CORRELATORS,
    AcceptancePolicy,
    ChshEstimate,
    CorrelatorTable,
    PolicyMode,
    balance_test,
    bias_test,
    chsh_estimate,
)

# Rounds per independently seeded block. Part of the reproducibility contract:
# changing it changes every simulated session.
BLOCK_SIZE = 1 << 14

_PAIRS = np.array(OUTCOME_PAIRS, dtype=np.int8)


class Mode(enum.Enum):
    DI = "DI"
    DD = "DD"


class Role(enum.Enum):
    KEY = "Key"
    TEST = "Test"
    DISCARD = "Discard"


def round_role(alice_input: AliceInput, bob_input: BobInput) -> Role:
    if alice_input != AliceInput.A0:
        return Role.TEST
    return Role.KEY if bob_input == BobInput.B1 else Role.DISCARD


@dataclass(frozen=True)
class RoundRecord:
    alice_input: AliceInput
    bob_input: BobInput
    a: int
    b: int
    role: Role
    replaced_by_eve: bool
    eve_known_bit: int | None


class BoxSource:
    """Supplies one box pair per round.

    ``components`` lists the distinct boxes; ``assign`` picks a component for
    each of ``n`` rounds and reports which rounds Eve controls and the key
    output she fixed for them (0 where she does not).
    """

    components: Sequence[BoxPair]

    def assign(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        raise NotImplementedError


class FixedSource(BoxSource):
    def __init__(self, box: BoxPair, replaced_by_eve: bool = False, eve_bit: int = 0):
        self.components = (box,)
        self.replaced_by_eve = replaced_by_eve
        self.eve_bit = eve_bit

    def assign(self, n, rng):
        return (
            np.zeros(n, dtype=np.intp),
            np.full(n, self.replaced_by_eve),
            np.full(n, self.eve_bit, dtype=np.int8),
        )


@dataclass
class ProtocolResult:
    mode: Mode
    alice_key: np.ndarray
    bob_key: np.ndarray
    table: CorrelatorTable
    chsh: ChshEstimate
    accepted: bool
    bias_detected: bool | None
    balance_detected: bool
    rounds: int
    key_rounds: int
    test_rounds: int
    discard_rounds: int
    leaked_positions: np.ndarray
    eve_bits: np.ndarray
    round_log: dict | None = field(default=None, repr=False)

    @property
    def empty_key(self) -> bool:
        return self.key_rounds == 0

    @property
    def leaked_fraction(self) -> float:
        return len(self.leaked_positions) / self.key_rounds if self.key_rounds else 0.0

    def round_records(self) -> list[RoundRecord]:
        if self.round_log is None:
            raise ValueError("session was run without keep_rounds=True")
        log = self.round_log
        out = []
        for ai, bi, a, b, rep, eb in zip(log["alice_input"], log["bob_input"], log["a"], log["b"], log["replaced"], log["eve_bit"]):
            ai, bi = AliceInput(int(ai)), BobInput(int(bi))
            out.append(RoundRecord(ai, bi, int(a), int(b), round_role(ai, bi), bool(rep), int(eb) if rep else None))
        return out

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "accepted": self.accepted,
            "bias_detected": self.bias_detected,
            "balance_detected": self.balance_detected,
            "rounds": self.rounds,
            "key_rounds": self.key_rounds,
            "test_rounds": self.test_rounds,
            "discard_rounds": self.discard_rounds,
            "chsh": self.chsh.to_dict(),
            "table": self.table.to_dict(),
            "alice_key": _bits(self.alice_key),
            "bob_key": _bits(self.bob_key),
            "leaked_positions": self.leaked_positions.tolist(),
            "eve_bits": _bits(self.eve_bits),
        }


def _bits(arr: np.ndarray) -> str:
    return "".join("1" if v else "0" for v in arr.tolist())


def _as_source(box_source) -> BoxSource:
    if isinstance(box_source, BoxSource):
        return box_source
    if isinstance(box_source, BoxPair):
        return FixedSource(box_source)
    raise TypeError(f"expected a BoxSource or BoxPair, got {type(box_source).__name__}")


def _draw_inputs(n, rng, weights, k):
    if weights is None:
        return rng.integers(0, k, size=n, dtype=np.int8)
    return rng.choice(k, size=n, p=weights).astype(np.int8)


def simulate_rounds(source: BoxSource, n_rounds: int, seed: int, key: tuple = (), alice_weights=None, bob_weights=None) -> dict:
    """Raw round data for ``n_rounds`` rounds, generated block by block."""
    cdf = np.cumsum(np.stack([c.joint_distribution() for c in source.components]), axis=-1)[..., :3]
    chunks = []
    for block, start in enumerate(range(0, n_rounds, BLOCK_SIZE)):
        n = min(BLOCK_SIZE, n_rounds - start)
        rng = stream(seed, *key, block)
        ain = _draw_inputs(n, rng, alice_weights, 3)
        bin_ = _draw_inputs(n, rng, bob_weights, 2)
        comp, replaced, eve_bit = source.assign(n, rng)
        u = rng.random(n)
        idx = (cdf[comp, ain, bin_] <= u[:, None]).sum(axis=1)
        chunks.append((ain, bin_, _PAIRS[idx, 0], _PAIRS[idx, 1], replaced, eve_bit))
    names = ("alice_input", "bob_input", "a", "b", "replaced", "eve_bit")
    return {name: np.concatenate([c[i] for c in chunks]) for i, name in enumerate(names)}


def run_session(
    mode: Mode,
    box_source,
    n_rounds: int,
    policy: AcceptancePolicy,
    seed: int,
    *,
    key: tuple = (),
    reference=HONEST_CORRELATORS,
    alice_weights=None,
    bob_weights=None,
    keep_rounds: bool = False,
) -> ProtocolResult:
    """Run one session and sift it.

    Key rounds are (A0, B1), test rounds are those where Alice chose A1 or A2,
    and (A0, B2) rounds are discarded. Outputs map to key bits as +1 -> 0,
    -1 -> 1. Raises ``InsufficientDataError`` if a CHSH cell is empty.
    """
    if n_rounds < 1:
        raise ValueError("n_rounds must be at least 1")
    mode = Mode(mode)
    log = simulate_rounds(_as_source(box_source), n_rounds, seed, key, alice_weights, bob_weights)
    ain, bin_, a, b = log["alice_input"], log["bob_input"], log["a"], log["b"]

    table = CorrelatorTable.from_rounds(ain, bin_, a, b)
    chsh = chsh_estimate(table)

    key_mask = (ain == 0) & (bin_ == 0)
    alice_key = (a[key_mask] == -1).astype(np.uint8)
    bob_key = (b[key_mask] == -1).astype(np.uint8)
    replaced_key = log["replaced"][key_mask]
    leaked = np.flatnonzero(replaced_key)
    eve_bits = (log["eve_bit"][key_mask][leaked] == -1).astype(np.uint8)

    bias_detected = None
    if mode is Mode.DD or policy.mode is PolicyMode.THRESHOLD_PLUS_BIAS:
        bias_detected, _ = bias_test(table, reference, policy.bias_z_threshold)
    balance_detected, _ = balance_test(table, policy.bias_z_threshold)

    accepted = chsh.s_hat >= policy.s_min
    if policy.mode is PolicyMode.THRESHOLD_PLUS_BIAS:
        accepted = accepted and not bias_detected

    n_key = int(key_mask.sum())
    n_test = int((ain > 0).sum())
    return ProtocolResult(
        mode=mode,
        alice_key=alice_key,
        bob_key=bob_key,
        table=table,
        chsh=chsh,
        accepted=bool(accepted),
        bias_detected=None if bias_detected is None else bool(bias_detected),
        balance_detected=bool(balance_detected),
        rounds=n_rounds,
        key_rounds=n_key,
        test_rounds=n_test,
        discard_rounds=n_rounds - n_key - n_test,
        leaked_positions=leaked,
        eve_bits=eve_bits,
        round_log=log if keep_rounds else None,
    )


def key_agreement_rate(result: ProtocolResult) -> float:
    if result.key_rounds < 1:
        raise ValueError("session produced no key rounds")
    return float(np.mean(result.alice_key == result.bob_key))


def expected_round_budget(n_rounds: int) -> tuple[float, float, float]:
    """Expected (key, test, discard) round counts under uniform inputs."""
    if n_rounds < 1:
        raise ValueError("n_rounds must be at least 1")
    return n_rounds / 6, 4 * n_rounds / 6, n_rounds / 6


def sifting_fractions_stderr(n_rounds: int) -> tuple[float, float, float]:
    """Multinomial standard errors of the three sifting fractions."""
    return tuple(math.sqrt(q * (1 - q) / n_rounds) for q in (1 / 6, 4 / 6, 1 / 6))
