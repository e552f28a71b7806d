"""Small exact quantum kernel: density matrices, +/-1 observables, Born-rule sampling.

Only what the protocol needs: two- and three-qubit states split between Alice
(leading tensor factors) and Bob (trailing factors), and dichotomic projective
measurements on each side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

TRACE_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
EIGEN_TOL = 1e-10
IMAG_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

# Joint outcome order used everywhere: (+,+), (+,-), (-,+), (-,-).
OUTCOME_PAIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def kron(*ops: np.ndarray) -> np.ndarray:
    return reduce(np.kron, ops)


def ket(bits: str) -> np.ndarray:
    """Computational basis ket, e.g. ``ket("01")`` is |0>|1>."""
    vec = np.zeros(2 ** len(bits), dtype=complex)
    vec[int(bits, 2)] = 1.0
    return vec


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Density matrix with an Alice/Bob split of its qubits.

    ``partition`` is ``(alice_qubits, bob_qubits)``; Alice's qubits are the
    leading tensor factors.
    """

    density_matrix: np.ndarray
    partition: tuple[int, int] = (1, 1)

    def __post_init__(self) -> None:
        rho = np.array(self.density_matrix, dtype=complex)
        n_a, n_b = self.partition
        if n_a < 1 or n_b < 1 or n_a + n_b not in (2, 3):
            raise ValueError(f"unsupported qubit partition {self.partition}")
        dim = 2 ** (n_a + n_b)
        if rho.shape != (dim, dim):
            raise ValueError(f"density matrix shape {rho.shape} does not match partition {self.partition}")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            raise ValueError("density matrix must have unit trace")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix must be Hermitian")
        if np.min(np.linalg.eigvalsh(rho)) < -PSD_TOL:
            raise ValueError("density matrix must be positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "density_matrix", rho)

    @classmethod
    def from_ket(cls, vec: np.ndarray, partition: tuple[int, int] = (1, 1)) -> QuantumState:
        vec = np.asarray(vec, dtype=complex)
        vec = vec / np.linalg.norm(vec)
        return cls(np.outer(vec, vec.conj()), partition)

    @property
    def dims(self) -> tuple[int, int]:
        return 2 ** self.partition[0], 2 ** self.partition[1]

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.density_matrix @ self.density_matrix)))


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian operator with spectrum in {+1, -1}; projectors are cached."""

    matrix: np.ndarray
    label: str = ""
    plus_projector: np.ndarray = field(init=False, repr=False)
    minus_projector: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("observable must be a square matrix")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("observable must be Hermitian")
        vals, vecs = np.linalg.eigh(m)
        if np.any(np.minimum(np.abs(vals - 1), np.abs(vals + 1)) > EIGEN_TOL):
            raise ValueError(f"observable eigenvalues must be +/-1, got {vals}")
        plus = vecs[:, vals > 0]
        minus = vecs[:, vals < 0]
        p_plus = plus @ plus.conj().T
        p_minus = minus @ minus.conj().T
        for arr in (m, p_plus, p_minus):
            arr.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "plus_projector", p_plus)
        object.__setattr__(self, "minus_projector", p_minus)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def projector(self, outcome: int) -> np.ndarray:
        if outcome == 1:
            return self.plus_projector
        if outcome == -1:
            return self.minus_projector
        raise ValueError(f"outcome must be +1 or -1, got {outcome}")


def bell_phi_plus() -> QuantumState:
    """(|00> + |11>)/sqrt(2)."""
    return QuantumState.from_ket(ket("00") + ket("11"))


def werner_state(visibility: float) -> QuantumState:
    """``v |Phi+><Phi+| + (1 - v) I/4``."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
    rho = visibility * bell_phi_plus().density_matrix + (1 - visibility) * np.eye(4) / 4
    return QuantumState(rho)


def product_state(alice_bits: str, bob_bits: str) -> QuantumState:
    """Computational-basis product state such as |01>_A |0>_B."""
    return QuantumState.from_ket(ket(alice_bits + bob_bits), (len(alice_bits), len(bob_bits)))


def standard_observables() -> dict[str, Observable]:
    """Alice's A0, A1, A2 and Bob's B1, B2 for the maximal-violation setup."""
    r2 = np.sqrt(2)
    return {
        "A0": Observable(SIGMA_Z, "A0"),
        "A1": Observable((SIGMA_Z + SIGMA_X) / r2, "A1"),
        "A2": Observable((SIGMA_Z - SIGMA_X) / r2, "A2"),
        "B1": Observable(SIGMA_Z, "B1"),
        "B2": Observable(SIGMA_X, "B2"),
    }


def _check_dims(state: QuantumState, obs_a: Observable, obs_b: Observable) -> None:
    d_a, d_b = state.dims
    if obs_a.dim != d_a or obs_b.dim != d_b:
        raise ValueError(
            f"observable dimensions ({obs_a.dim}, {obs_b.dim}) do not match state partition dims ({d_a}, {d_b})"
        )


def expectation(state: QuantumState, obs_a: Observable, obs_b: Observable) -> float:
    """Tr(rho (A x B))."""
    _check_dims(state, obs_a, obs_b)
    value = np.trace(state.density_matrix @ np.kron(obs_a.matrix, obs_b.matrix))
    if abs(value.imag) > IMAG_TOL:
        raise ArithmeticError(f"expectation has imaginary residue {value.imag}")
    return float(value.real)


def outcome_probabilities(state: QuantumState, obs_a: Observable, obs_b: Observable) -> np.ndarray:
    """Born probabilities of the four joint outcomes in ``OUTCOME_PAIRS`` order."""
    _check_dims(state, obs_a, obs_b)
    rho = state.density_matrix
    probs = np.array(
        [np.trace(rho @ np.kron(obs_a.projector(a), obs_b.projector(b))).real for a, b in OUTCOME_PAIRS]
    )
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_outcomes(
    state: QuantumState,
    obs_a: Observable,
    obs_b: Observable,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Draw joint +/-1 outcomes by the Born rule.

    Returns a single ``(a, b)`` tuple when ``size`` is None, otherwise two
    int8 arrays of length ``size``.
    """
    probs = outcome_probabilities(state, obs_a, obs_b)
    pairs = np.array(OUTCOME_PAIRS, dtype=np.int8)
    if size is None:
        a, b = pairs[rng.choice(4, p=probs)]
        return int(a), int(b)
    idx = rng.choice(4, size=size, p=probs)
    return pairs[idx, 0], pairs[idx, 1]


def chsh_analytic(state: QuantumState, observables: dict[str, Observable]) -> float:
    """<A1B1> + <A1B2> + <A2B1> - <A2B2>."""
    o = observables
    return (
        expectation(state, o["A1"], o["B1"])
        + expectation(state, o["A1"], o["B2"])
        + expectation(state, o["A2"], o["B1"])
        - expectation(state, o["A2"], o["B2"])
    )
