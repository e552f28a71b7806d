# %% [markdown]
# # How rare is the "perfect" statistic?
#
# With a fair coin the chance of an exact n/2 : n/2 split shrinks as n grows,
# which is why a CHSH check must tolerate values below 2*sqrt(2).

# %%
from chsh_qkd.stats import fluctuation_report, pass_probability_normal

report = fluctuation_report([2, 4, 10, 100, 1000, 10_000, 100_000])
for row in report["rows"]:
    print(f"n={row['n']:>7}: P(exact half) = {row['perfect_ratio_probability']:.6g}")

r = report["ratio"]
print(f"\nn={r['n']}: P({r['k']}) / P({r['n'] // 2}) = {r['ratio']:.4g}  (ln = {r['log_ratio']:.2f})")

# %% [markdown]
# Honest sessions with 10^5 rounds have std error about 0.011 on S, so a
# threshold of 2.5 is many standard errors below the honest mean.

# %%
from chsh_qkd.attack import honest_chsh_std_error
from chsh_qkd.stats import TSIRELSON

se = honest_chsh_std_error(100_000)
print(f"honest std error at n=1e5: {se:.4f}; pass probability at s_min=2.5: {pass_probability_normal(TSIRELSON, se, 2.5)}")
