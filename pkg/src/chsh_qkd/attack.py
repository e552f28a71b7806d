"""Eve's box-replacement attack: closed-form bound, Monte Carlo, and the n-dependent tradeoff."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from .boxes import LOCAL_KINDS, BoxPair, LocalBoxSpec, dd_product_box, honest_box, local_box
from .protocol import BoxSource, Mode, run_session
from .quantum import QuantumState, bell_phi_plus
from .stats import TSIRELSON, AcceptancePolicy, InsufficientDataError, pass_probability_normal


@dataclass(frozen=True)
class AttackConfig:
    replacement_probability: float
    kind_weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    a0_plus_probability: float = 0.5
    mode: Mode = Mode.DI

    def __post_init__(self) -> None:
        if not 0.0 <= self.replacement_probability <= 1.0:
            raise ValueError(f"replacement probability must lie in [0, 1], got {self.replacement_probability}")
        w = tuple(float(x) for x in self.kind_weights)
        if len(w) != 4 or min(w) < 0 or abs(sum(w) - 1) > 1e-12:
            raise ValueError(f"kind weights must be four nonnegative numbers summing to 1, got {self.kind_weights}")
        if not 0.0 <= self.a0_plus_probability <= 1.0:
            raise ValueError("a0_plus_probability must lie in [0, 1]")
        object.__setattr__(self, "kind_weights", w)
        object.__setattr__(self, "mode", Mode(self.mode))


def expected_chsh(p: float, s_n: float = TSIRELSON) -> float:
    """Expected CHSH value when a fraction ``p`` of boxes are local (S = 2)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return 2 * p + s_n * (1 - p)


def max_replacement_probability(s_min: float, s_n: float = TSIRELSON) -> float:
    """Largest replacement fraction whose expected CHSH value still reaches ``s_min``."""
    if s_n <= 2:
        raise ValueError(f"s_n must exceed 2, got {s_n}")
    if not 2 < s_min <= s_n:
        raise ValueError(f"need 2 < s_min <= s_n, got s_min={s_min}, s_n={s_n}")
    return min(max((s_n - s_min) / (s_n - 2), 0.0), 1.0)


def per_kind_probability(s_min: float, s_n: float = TSIRELSON) -> float:
    """Replacement probability for each of X1..X4 when they are used equally."""
    return max_replacement_probability(s_min, s_n) / len(LOCAL_KINDS)


class AttackedSource(BoxSource):
    """Per round: with probability p a box Eve controls, otherwise the honest box.

    In DI mode Eve's box is a deterministic X1..X4 table; in DD mode it is the
    |00> or |11> product state measured with the fixed standard observables.
    """

    def __init__(self, config: AttackConfig, honest_state: QuantumState | None = None):
        self.config = config
        honest = honest_box(bell_phi_plus() if honest_state is None else honest_state)
        if config.mode is Mode.DI:
            eve = [local_box(LocalBoxSpec(kind, a0)) for kind in LOCAL_KINDS for a0 in (1, -1)]
        else:
            eve = [dd_product_box(1), dd_product_box(-1)]
        self.components = (honest, *eve)

    def assign(self, n, rng):
        cfg = self.config
        replaced = rng.random(n) < cfg.replacement_probability
        kind = rng.choice(4, size=n, p=cfg.kind_weights)
        plus = rng.random(n) < cfg.a0_plus_probability
        offset = 2 * kind if cfg.mode is Mode.DI else 0
        comp = np.where(replaced, 1 + offset + (~plus), 0).astype(np.intp)
        eve_bit = np.where(replaced, np.where(plus, 1, -1), 0).astype(np.int8)
        return comp, replaced, eve_bit

    def next_box(self, rng: np.random.Generator) -> tuple[BoxPair, bool, int | None]:
        """Single-round draw: (box, replaced, Eve's a0 or None)."""
        comp, replaced, eve_bit = self.assign(1, rng)
        return self.components[comp[0]], bool(replaced[0]), int(eve_bit[0]) if replaced[0] else None


def attacked_box_source(config: AttackConfig, honest_state: QuantumState | None = None) -> AttackedSource:
    return AttackedSource(config, honest_state)


@dataclass(frozen=True)
class TrialRow:
    trial: int
    accepted: bool
    s_hat: float
    std_error: float
    key_rounds: int
    leaked_bits: int
    leaked_fraction: float
    agreement: float
    bias_detected: bool
    balance_detected: bool
    eve_bits_correct: bool
    insufficient_data: bool


TRIAL_COLUMNS = tuple(TrialRow.__dataclass_fields__)


@dataclass
class AttackOutcome:
    trials: int
    pass_rate: float
    mean_s_hat: float
    s_hat_spread: float
    leaked_fraction_given_pass: float | None
    agreement_rate: float
    bias_detection_rate: float
    balance_detection_rate: float
    eve_bits_all_correct: bool
    rows: list[TrialRow] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("rows")
        return d


def _run_trial(config, n_rounds, policy, seed, honest_state, trial) -> TrialRow:
    source = AttackedSource(config, honest_state)
    try:
        res = run_session(config.mode, source, n_rounds, policy, seed, key=(trial,))
    except InsufficientDataError:
        return TrialRow(trial, False, math.nan, math.nan, 0, 0, 0.0, math.nan, False, False, True, True)
    leaked = res.leaked_positions
    correct = bool(
        np.array_equal(res.eve_bits, res.alice_key[leaked]) and np.array_equal(res.eve_bits, res.bob_key[leaked])
    )
    agreement = float(np.mean(res.alice_key == res.bob_key)) if res.key_rounds else math.nan
    return TrialRow(
        trial=trial,
        accepted=res.accepted,
        s_hat=res.chsh.s_hat,
        std_error=res.chsh.std_error,
        key_rounds=res.key_rounds,
        leaked_bits=len(leaked),
        leaked_fraction=res.leaked_fraction,
        agreement=agreement,
        bias_detected=bool(res.bias_detected),
        balance_detected=res.balance_detected,
        eve_bits_correct=correct,
        insufficient_data=False,
    )


def simulate_attack(
    config: AttackConfig,
    n_rounds: int,
    trials: int,
    policy: AcceptancePolicy,
    seed: int,
    *,
    honest_state: QuantumState | None = None,
    workers: int = 1,
) -> AttackOutcome:
    """Independent attacked sessions; trial ``t`` uses stream key ``(seed, t)``.

    Leakage is averaged over accepted sessions only. Sessions with an empty
    CHSH cell count as rejected.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")

    def one(t):
        return _run_trial(config, n_rounds, policy, seed, honest_state, t)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(trials)))
    else:
        rows = [one(t) for t in range(trials)]

    ok = [r for r in rows if not r.insufficient_data]
    passed = [r for r in rows if r.accepted]
    return AttackOutcome(
        trials=trials,
        pass_rate=len(passed) / trials,
        mean_s_hat=float(np.mean([r.s_hat for r in ok])) if ok else math.nan,
        s_hat_spread=float(np.std([r.s_hat for r in ok], ddof=1)) if len(ok) > 1 else math.nan,
        leaked_fraction_given_pass=float(np.mean([r.leaked_fraction for r in passed])) if passed else None,
        agreement_rate=float(np.nanmean([r.agreement for r in ok])) if ok else math.nan,
        bias_detection_rate=sum(r.bias_detected for r in rows) / trials,
        balance_detection_rate=sum(r.balance_detected for r in rows) / trials,
        eve_bits_all_correct=all(r.eve_bits_correct for r in rows),
        rows=rows,
    )


def chsh_variance_decomposition(config: AttackConfig, n_rounds: int, honest_state: QuantumState | None = None) -> dict:
    """Split Var(S_hat) into honest, Eve-box and replacement-mixing parts.

    Per test cell the per-round product ab has variance
    ``(1-p)(1-cH^2) + p(1-cE^2) + p(1-p)(cH-cE)^2``, with cH and cE the honest
    and Eve-box correlators. A single deterministic kind has cE = +/-1, so
    its rounds add nothing. Cells are assumed to hold n_rounds/6 rounds each.
    """
    src = AttackedSource(config, honest_state)
    p = config.replacement_probability
    tables = [c.joint_distribution() for c in src.components]
    weights = []
    if config.mode is Mode.DI:
        for w in config.kind_weights:
            weights += [w * config.a0_plus_probability, w * (1 - config.a0_plus_probability)]
    else:
        weights = [config.a0_plus_probability, 1 - config.a0_plus_probability]
    product_sign = np.array([1, -1, -1, 1])
    m = n_rounds / 6
    honest = eve = mixing = 0.0
    for i, j in ((1, 0), (1, 1), (2, 0), (2, 1)):
        c_h = float(tables[0][i, j] @ product_sign)
        c_e = float(sum(w * (t[i, j] @ product_sign) for w, t in zip(weights, tables[1:])))
        honest += (1 - p) * (1 - c_h**2) / m
        eve += p * (1 - c_e**2) / m
        mixing += p * (1 - p) * (c_h - c_e) ** 2 / m
    total = honest + eve + mixing
    return {"honest": honest, "eve_boxes": eve, "mixing": mixing, "total": total, "std_error": math.sqrt(total)}


def pass_probability_estimate(config: AttackConfig, n_rounds: int, s_min: float, honest_state: QuantumState | None = None) -> float:
    """Normal-approximation pass probability for a DI attack on Phi+ boxes."""
    sd = chsh_variance_decomposition(config, n_rounds, honest_state)["std_error"]
    return pass_probability_normal(expected_chsh(config.replacement_probability), sd, s_min)


@dataclass(frozen=True)
class SweepRow:
    n: int
    s_min: float
    p_max: float
    expected_leaked_bits: float


SWEEP_COLUMNS = ("n", "s_min", "p_max", "expected_leaked_bits")


def honest_chsh_std_error(n: int) -> float:
    """sqrt(2/m), m = n/6 rounds per test cell, each correlator variance 1/2."""
    m = (4 * n / 6) / 4
    return math.sqrt(2 / m)


def tradeoff_sweep(n_values, alpha: float, s_n: float = TSIRELSON) -> list[SweepRow]:
    """Per n: the threshold rejecting honest runs with probability ``alpha``, and Eve's p_max there."""
    if not 0 < alpha <= 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5], got {alpha}")
    z = norm.ppf(1 - alpha)
    rows = []
    for n in n_values:
        if n < 100:
            raise ValueError(f"n must be at least 100, got {n}")
        s_min = s_n - z * honest_chsh_std_error(n)
        p_max = min(max((s_n - s_min) / (s_n - 2), 0.0), 1.0)
        rows.append(SweepRow(int(n), float(s_min), float(p_max), float(p_max * n / 6)))
    return rows
