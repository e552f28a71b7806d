# %% [markdown]
# # Larger sessions allow a stricter threshold
#
# Choosing s_min so that honest sessions fail with probability alpha, the
# slack shrinks like 1/sqrt(n): Eve's share p_max falls, though the number of
# key bits she could learn, p_max * n/6, still grows.

# %%
from chsh_qkd.attack import tradeoff_sweep

for alpha in (0.01, 1e-6):
    print(f"alpha = {alpha}")
    for row in tradeoff_sweep([10**3, 10**4, 10**5, 10**6, 10**7, 10**8], alpha):
        print(f"  n={row.n:>10}: s_min={row.s_min:.5f}  p_max={row.p_max:.5f}  leaked bits ~ {row.expected_leaked_bits:.1f}")
