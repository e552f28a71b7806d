"""Finite-sample CHSH estimation, acceptance checks and coin-toss fluctuation numbers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

TSIRELSON = 2 * math.sqrt(2)

# Cell order (1,1), (1,2), (2,1), (2,2) and the sign each cell carries in S.
CELL_SIGNS = (1, 1, 1, -1)

HONEST_CORRELATORS = (1 / math.sqrt(2), 1 / math.sqrt(2), 1 / math.sqrt(2), -1 / math.sqrt(2))

# Largest n evaluated with exact integer arithmetic before switching to log space.
_EXACT_BINOMIAL_MAX_N = 2048


class InsufficientDataError(ValueError):
    """A correlator cell has no rounds, so the CHSH check cannot be evaluated."""


@dataclass(frozen=True)
class CorrelatorTable:
    """Same/different outcome counts for the four test setting pairs."""

    n_same: tuple[int, int, int, int]
    n_diff: tuple[int, int, int, int]

    def __post_init__(self) -> None:
        same = tuple(int(v) for v in self.n_same)
        diff = tuple(int(v) for v in self.n_diff)
        if len(same) != 4 or len(diff) != 4:
            raise ValueError("need exactly four cells")
        if min(same + diff) < 0:
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "n_same", same)
        object.__setattr__(self, "n_diff", diff)

    @classmethod
    def empty(cls) -> CorrelatorTable:
        return cls((0, 0, 0, 0), (0, 0, 0, 0))

    @classmethod
    def from_rounds(cls, alice_in, bob_in, a, b) -> CorrelatorTable:
        """Tally test rounds; Alice inputs 1, 2 and Bob inputs 0, 1 (B1, B2) index the cells.

        Rounds with Alice input 0 are ignored.
        """
        alice_in = np.asarray(alice_in)
        bob_in = np.asarray(bob_in)
        test = alice_in > 0
        cell = (alice_in[test] - 1) * 2 + bob_in[test]
        same = np.asarray(a)[test] == np.asarray(b)[test]
        n_same = np.bincount(cell[same], minlength=4)
        n_diff = np.bincount(cell[~same], minlength=4)
        return cls(tuple(n_same.tolist()), tuple(n_diff.tolist()))

    @property
    def totals(self) -> tuple[int, int, int, int]:
        return tuple(s + d for s, d in zip(self.n_same, self.n_diff))

    def __add__(self, other: CorrelatorTable) -> CorrelatorTable:
        return CorrelatorTable(
            tuple(x + y for x, y in zip(self.n_same, other.n_same)),
            tuple(x + y for x, y in zip(self.n_diff, other.n_diff)),
        )

    def to_dict(self) -> dict:
        return {"n_same": list(self.n_same), "n_diff": list(self.n_diff)}

    @classmethod
    def from_dict(cls, data: dict) -> CorrelatorTable:
        return cls(tuple(data["n_same"]), tuple(data["n_diff"]))


@dataclass(frozen=True)
class ChshEstimate:
    s_hat: float
    std_error: float
    per_correlator: tuple[tuple[float, float], ...]
    sample_counts: tuple[int, int, int, int]

    def to_dict(self) -> dict:
        return {
            "s_hat": self.s_hat,
            "std_error": self.std_error,
            "per_correlator": [list(pc) for pc in self.per_correlator],
            "sample_counts": list(self.sample_counts),
        }


class PolicyMode(enum.Enum):
    THRESHOLD_ONLY = "ThresholdOnly"
    THRESHOLD_PLUS_BIAS = "ThresholdPlusBias"


@dataclass(frozen=True)
class AcceptancePolicy:
    s_min: float = 2.5
    mode: PolicyMode = PolicyMode.THRESHOLD_ONLY
    bias_z_threshold: float = 5.0

    def __post_init__(self) -> None:
        if not 2.0 <= self.s_min <= TSIRELSON + 1e-12:
            raise ValueError(f"s_min must lie in [2, 2*sqrt(2)], got {self.s_min}")
        if self.bias_z_threshold <= 0:
            raise ValueError("bias_z_threshold must be positive")


def correlator_estimate(n_same: int, n_diff: int) -> tuple[float, float]:
    """Empirical P(a=b) - P(a!=b) and its plug-in standard error (floored at 1/n)."""
    n = n_same + n_diff
    if n < 1:
        raise InsufficientDataError("correlator cell has no rounds")
    est = (n_same - n_diff) / n
    se = max(math.sqrt(max(1.0 - est * est, 0.0) / n), 1.0 / n)
    return est, se


def chsh_estimate(table: CorrelatorTable) -> ChshEstimate:
    per = tuple(correlator_estimate(s, d) for s, d in zip(table.n_same, table.n_diff))
    s_hat = sum(sign * est for sign, (est, _) in zip(CELL_SIGNS, per))
    se = math.sqrt(sum(e * e for _, e in per))
    return ChshEstimate(s_hat, se, per, table.totals)


def bias_test(table: CorrelatorTable, reference, z_threshold: float) -> tuple[bool, tuple[float, ...]]:
    """Flag any correlator that sits more than ``z_threshold`` standard errors off its reference."""
    if len(reference) != 4 or any(abs(r) > 1 for r in reference):
        raise ValueError("reference must be four correlators in [-1, 1]")
    z = []
    for (s, d), ref in zip(zip(table.n_same, table.n_diff), reference):
        est, se = correlator_estimate(s, d)
        z.append((est - ref) / se)
    return any(abs(v) > z_threshold for v in z), tuple(z)


def balance_test(table: CorrelatorTable, z_threshold: float) -> tuple[bool, tuple[float, ...]]:
    """Reference-free check that the four sign-adjusted correlators agree.

    Each signed correlator is compared with the mean of all four; this is the
    only per-correlator check available without trusting the devices.
    """
    per = [correlator_estimate(s, d) for s, d in zip(table.n_same, table.n_diff)]
    signed = [sign * est for sign, (est, _) in zip(CELL_SIGNS, per)]
    var = [se * se for _, se in per]
    mean = sum(signed) / 4
    z = []
    for k in range(4):
        v = (0.75**2) * var[k] + sum(var[j] for j in range(4) if j != k) / 16
        z.append((signed[k] - mean) / math.sqrt(v))
    return any(abs(v) > z_threshold for v in z), tuple(z)


def log_binomial_probability(n: int, k: int) -> float:
    """ln(C(n, k) / 2^n)."""
    if n < 0 or not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) - n * math.log(2)


def binomial_exact(n: int, k: int) -> float:
    """Probability of exactly ``k`` heads in ``n`` fair coin tosses."""
    if n < 0 or not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    if n <= _EXACT_BINOMIAL_MAX_N:
        # int / int true division is correctly rounded
        return math.comb(n, k) / 2**n
    return math.exp(log_binomial_probability(n, k))


def perfect_ratio_probability(n: int) -> float:
    """Probability that n fair tosses split exactly n/2 : n/2."""
    if n < 2 or n % 2:
        raise ValueError(f"n must be an even count >= 2, got {n}")
    return binomial_exact(n, n // 2)


def pass_probability_normal(s_expected: float, std_error: float, s_min: float) -> float:
    """P(S_hat >= s_min) with S_hat ~ Normal(s_expected, std_error)."""
    if std_error <= 0:
        raise ValueError("std_error must be positive")
    return float(norm.cdf((s_expected - s_min) / std_error))


def fluctuation_report(n_values, ratio_n: int = 10_000, ratio_k: int = 5_500) -> dict:
    """Perfect-split probabilities per n, plus P(ratio_k)/P(ratio_n/2) for ``ratio_n`` tosses."""
    rows = [{"n": int(n), "perfect_ratio_probability": perfect_ratio_probability(int(n))} for n in n_values]
    half = ratio_n // 2
    log_ratio = log_binomial_probability(ratio_n, ratio_k) - log_binomial_probability(ratio_n, half)
    return {
        "rows": rows,
        "ratio": {
            "n": ratio_n,
            "k": ratio_k,
            "p_k": binomial_exact(ratio_n, ratio_k),
            "p_half": binomial_exact(ratio_n, half),
            "log_ratio": log_ratio,
            "ratio": math.exp(log_ratio),
        },
    }
