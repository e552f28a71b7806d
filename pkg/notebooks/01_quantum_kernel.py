# %% [markdown]
# # Bell state, measurements and the CHSH value
#
# The honest devices share |Phi+> = (|00> + |11>)/sqrt(2). Alice measures one
# of A0 = Z, A1 = (Z+X)/sqrt(2), A2 = (Z-X)/sqrt(2); Bob measures B1 = Z or B2 = X.

# %%
import numpy as np

from chsh_qkd.quantum import (
    bell_phi_plus,
    chsh_analytic,
    expectation,
    product_state,
    sample_outcomes,
    standard_observables,
    werner_state,
)

obs = standard_observables()
phi = bell_phi_plus()

for a in ("A0", "A1", "A2"):
    print(a, [round(expectation(phi, obs[a], obs[b]), 6) for b in ("B1", "B2")])
print("CHSH(Phi+) =", chsh_analytic(phi, obs))

# %% [markdown]
# A product state |00> measured with the same fixed observables only reaches sqrt(2).

# %%
print("CHSH(|00>) =", chsh_analytic(product_state("0", "0"), obs))

# %% [markdown]
# Channel noise turns Phi+ into a Werner state; its CHSH value falls linearly.

# %%
for v in (1.0, 0.9, 1 / np.sqrt(2), 0.5, 0.0):
    print(f"visibility {v:.4f}: S = {chsh_analytic(werner_state(v), obs):.6f}")

# %% [markdown]
# Born-rule sampling converges to the analytic correlator.

# %%
rng = np.random.default_rng(1)
for n in (100, 10_000, 1_000_000):
    a, b = sample_outcomes(phi, obs["A1"], obs["B1"], rng, size=n)
    print(f"n={n:>9}: <a1 b1> = {np.mean(a * b):.5f}  (exact {1 / np.sqrt(2):.5f})")
