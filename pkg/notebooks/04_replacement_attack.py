# %% [markdown]
# # The replacement attack in the device-independent protocol
#
# Eve swaps a fraction p of the boxes for X1..X4. The expected CHSH value is
# 2p + 2*sqrt(2)(1-p); it stays above s_min while p <= (S_n - s_min)/(S_n - 2).

# %%
from chsh_qkd.attack import (
    AttackConfig,
    expected_chsh,
    max_replacement_probability,
    pass_probability_estimate,
    per_kind_probability,
    simulate_attack,
)
from chsh_qkd.stats import AcceptancePolicy

p_max = max_replacement_probability(2.5)
print(f"p_max = {p_max:.6f}, per kind = {per_kind_probability(2.5):.4f}, S_e(p_max) = {expected_chsh(p_max):.6f}")

# %% [markdown]
# Monte Carlo pass rate and leaked key fraction around the bound (a reduced
# number of trials keeps this quick; the test suite runs 1000).

# %%
policy = AcceptancePolicy(2.5)
n_rounds = 100_000
for p in (0.30, 0.36, 0.38, p_max, 0.41):
    cfg = AttackConfig(p)
    out = simulate_attack(cfg, n_rounds, 100, policy, seed=2024)
    leak = out.leaked_fraction_given_pass
    print(
        f"p={p:.4f}: pass rate {out.pass_rate:.2f} (normal approx {pass_probability_estimate(cfg, n_rounds, 2.5):.2f}), "
        f"mean S {out.mean_s_hat:.4f}, leaked {'-' if leak is None else f'{leak:.4f}'}, "
        f"Eve's bits correct: {out.eve_bits_all_correct}"
    )
