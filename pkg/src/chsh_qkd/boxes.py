"""Box pairs: black-box devices mapping (Alice input, Bob input) to (a, b) in {+1, -1}^2.

Every box exposes its full conditional distribution as a ``(3, 2, 4)`` array
``P[alice_input, bob_input, outcome]`` with outcomes ordered as
``quantum.OUTCOME_PAIRS``. The protocol engine samples from these tables in
bulk; ``respond`` is the one-round convenience path.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .quantum import (
    IDENTITY,
    OUTCOME_PAIRS,
    SIGMA_Z,
    Observable,
    QuantumState,
    outcome_probabilities,
    product_state,
    sample_outcomes,
    standard_observables,
)


class AliceInput(enum.IntEnum):
    A0 = 0
    A1 = 1
    A2 = 2


class BobInput(enum.IntEnum):
    B1 = 0
    B2 = 1


class BoxKind(enum.Enum):
    HONEST = "Honest"
    X1 = "X1"
    X2 = "X2"
    X3 = "X3"
    X4 = "X4"
    WERNER_NOISY = "WernerNoisy"
    DD_PRODUCT_ZERO = "DDProductZero"
    DD_PRODUCT_ONE = "DDProductOne"
    DETERMINISTIC = "Deterministic"


LOCAL_KINDS = (BoxKind.X1, BoxKind.X2, BoxKind.X3, BoxKind.X4)

# Sign of (a0, a1, a2, b1, b2) relative to Eve's chosen a0.
_LOCAL_PATTERNS = {
    BoxKind.X1: (1, 1, 1, 1, 1),
    BoxKind.X2: (1, 1, -1, 1, 1),
    BoxKind.X3: (1, 1, 1, 1, -1),
    BoxKind.X4: (1, -1, 1, 1, -1),
}

# CHSH test cells (Alice input, Bob input, sign in the polynomial).
TEST_CELLS = (
    (AliceInput.A1, BobInput.B1, 1),
    (AliceInput.A1, BobInput.B2, 1),
    (AliceInput.A2, BobInput.B1, 1),
    (AliceInput.A2, BobInput.B2, -1),
)

_OUTCOME_INDEX = {pair: i for i, pair in enumerate(OUTCOME_PAIRS)}


class BoxPair:
    """Base class for a pair of boxes held by Alice and Bob."""

    kind: BoxKind
    is_local: bool = False

    def joint_distribution(self) -> np.ndarray:
        raise NotImplementedError

    def respond(self, a_in: AliceInput, b_in: BobInput, rng: np.random.Generator | None = None) -> tuple[int, int]:
        raise NotImplementedError


class DeterministicBox(BoxPair):
    """Local box with a fixed output for every input: a 5-entry lookup table."""

    is_local = True

    def __init__(self, alice_outputs: Iterable[int], bob_outputs: Iterable[int], kind: BoxKind = BoxKind.DETERMINISTIC):
        self.alice_outputs = tuple(int(v) for v in alice_outputs)
        self.bob_outputs = tuple(int(v) for v in bob_outputs)
        if len(self.alice_outputs) != 3 or len(self.bob_outputs) != 2:
            raise ValueError("need three Alice outputs and two Bob outputs")
        if any(v not in (1, -1) for v in self.alice_outputs + self.bob_outputs):
            raise ValueError("outputs must be +1 or -1")
        self.kind = kind
        table = np.zeros((3, 2, 4))
        for i in AliceInput:
            for j in BobInput:
                table[i, j, _OUTCOME_INDEX[self.respond(i, j)]] = 1.0
        table.setflags(write=False)
        self._table = table

    def respond(self, a_in, b_in, rng=None):
        return self.alice_outputs[a_in], self.bob_outputs[b_in]

    def joint_distribution(self) -> np.ndarray:
        return self._table

    def __repr__(self) -> str:
        return f"DeterministicBox({self.kind.value}, a={self.alice_outputs}, b={self.bob_outputs})"


class QuantumBox(BoxPair):
    """Box pair realized by measuring a shared state with fixed observables."""

    def __init__(self, state: QuantumState, observables: Mapping[str, Observable] | None = None, kind: BoxKind = BoxKind.HONEST):
        obs = dict(standard_observables() if observables is None else observables)
        self.state = state
        self.alice_obs = tuple(obs[f"A{i}"] for i in range(3))
        self.bob_obs = (obs["B1"], obs["B2"])
        self.kind = kind
        table = np.empty((3, 2, 4))
        for i in AliceInput:
            for j in BobInput:
                table[i, j] = outcome_probabilities(state, self.alice_obs[i], self.bob_obs[j])
        table.setflags(write=False)
        self._table = table

    def respond(self, a_in, b_in, rng=None):
        if rng is None:
            raise ValueError("a quantum box needs a random stream")
        return sample_outcomes(self.state, self.alice_obs[a_in], self.bob_obs[b_in], rng)

    def joint_distribution(self) -> np.ndarray:
        return self._table

    def __repr__(self) -> str:
        return f"QuantumBox({self.kind.value}, partition={self.state.partition})"


@dataclass(frozen=True)
class LocalBoxSpec:
    kind: BoxKind
    a0: int = 1

    def __post_init__(self) -> None:
        if self.kind not in LOCAL_KINDS:
            raise ValueError(f"local box kind must be one of X1..X4, got {self.kind}")
        if self.a0 not in (1, -1):
            raise ValueError(f"a0 must be +1 or -1, got {self.a0}")

    def outputs(self) -> tuple[tuple[int, int, int], tuple[int, int]]:
        s = [self.a0 * sign for sign in _LOCAL_PATTERNS[self.kind]]
        return (s[0], s[1], s[2]), (s[3], s[4])


def local_box(spec: LocalBoxSpec) -> DeterministicBox:
    alice, bob = spec.outputs()
    return DeterministicBox(alice, bob, spec.kind)


def honest_box(state: QuantumState, kind: BoxKind | None = None) -> QuantumBox:
    """Two-qubit state measured with the standard observables."""
    if state.partition != (1, 1):
        raise ValueError(f"honest box needs a two-qubit state, got partition {state.partition}")
    if kind is None:
        kind = BoxKind.HONEST if state.purity > 1 - 1e-12 else BoxKind.WERNER_NOISY
    return QuantumBox(state, kind=kind)


def dd_product_box(a0: int) -> QuantumBox:
    """Eve's only option when the measurements are fixed: |00> (a0=+1) or |11> (a0=-1)."""
    if a0 == 1:
        return QuantumBox(product_state("0", "0"), kind=BoxKind.DD_PRODUCT_ZERO)
    if a0 == -1:
        return QuantumBox(product_state("1", "1"), kind=BoxKind.DD_PRODUCT_ONE)
    raise ValueError(f"a0 must be +1 or -1, got {a0}")


def correlators_of_deterministic_box(box: BoxPair) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Exact <a1b1>, <a1b2>, <a2b1>, <a2b2> of a deterministic box."""
    if not box.is_local:
        raise TypeError(f"{box!r} is not deterministic")
    out = []
    for i, j, _ in TEST_CELLS:
        a, b = box.respond(i, j)
        out.append(Fraction(a * b))
    return tuple(out)


def chsh_of_deterministic_box(box: BoxPair) -> Fraction:
    c = correlators_of_deterministic_box(box)
    return sum((sign * v for v, (_, _, sign) in zip(c, TEST_CELLS)), Fraction(0))


def mixture_correlators(weights: Mapping[LocalBoxSpec, float] | Iterable[tuple[LocalBoxSpec, float]]):
    """Weighted average of the exact correlators of several local boxes.

    Weights are converted with ``Fraction`` so integer, Fraction and binary-exact
    float weights give exact results.
    """
    items = list(weights.items() if isinstance(weights, Mapping) else weights)
    if not items:
        raise ValueError("no boxes given")
    fw = [(spec, Fraction(w)) for spec, w in items]
    if any(w < 0 for _, w in fw):
        raise ValueError("weights must be nonnegative")
    total = sum(w for _, w in fw)
    if abs(float(total) - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {float(total)}")
    acc = [Fraction(0)] * 4
    for spec, w in fw:
        for k, v in enumerate(correlators_of_deterministic_box(local_box(spec))):
            acc[k] += w * v
    return tuple(acc)


def chsh_from_correlators(c) -> Fraction | float:
    return c[0] + c[1] + c[2] - c[3]


def verify_local_realization(spec: LocalBoxSpec, rng: np.random.Generator | None = None, shots: int = 64) -> bool:
    """Check the product-state construction of X1 or X2 against its lookup table.

    X1: |00> (a0=+1) or |11> (a0=-1), every input measured as sigma_z.
    X2: Alice holds two qubits |01> (or |10>), Bob |0> (or |1>);
        A0 = A1 = sigma_z x I, A2 = I x sigma_z, B1 = B2 = sigma_z.
    Each of the six input pairs must give a point-mass Born distribution on
    the table's output, and sampled outcomes must all agree with it.
    """
    if spec.kind is BoxKind.X1:
        bit = "0" if spec.a0 == 1 else "1"
        z = Observable(SIGMA_Z, "sigma_z")
        box = QuantumBox(product_state(bit, bit), {"A0": z, "A1": z, "A2": z, "B1": z, "B2": z}, kind=BoxKind.X1)
    elif spec.kind is BoxKind.X2:
        alice_bits, bob_bit = ("01", "0") if spec.a0 == 1 else ("10", "1")
        z_first = Observable(np.kron(SIGMA_Z, IDENTITY), "sigma_z x I")
        z_second = Observable(np.kron(IDENTITY, SIGMA_Z), "I x sigma_z")
        z = Observable(SIGMA_Z, "sigma_z")
        box = QuantumBox(
            product_state(alice_bits, bob_bit),
            {"A0": z_first, "A1": z_first, "A2": z_second, "B1": z, "B2": z},
            kind=BoxKind.X2,
        )
    else:
        raise NotImplementedError(f"no quantum realization is available for {spec.kind.value}")

    rng = np.random.default_rng(0) if rng is None else rng
    table = local_box(spec)
    for i in AliceInput:
        for j in BobInput:
            expected = table.respond(i, j)
            probs = box.joint_distribution()[i, j]
            if abs(probs[_OUTCOME_INDEX[expected]] - 1.0) > 1e-12:
                return False
            if any(box.respond(i, j, rng) != expected for _ in range(shots)):
                return False
    return True
