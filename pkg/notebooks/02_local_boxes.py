# %% [markdown]
# # Eve's local boxes X1..X4
#
# Each box answers every input with a value fixed in advance from Eve's key
# bit a0. All four give a0 = b1 on the key inputs, so Eve knows the key bit.

# %%
from fractions import Fraction

from chsh_qkd.boxes import (
    LOCAL_KINDS,
    AliceInput,
    BobInput,
    LocalBoxSpec,
    chsh_of_deterministic_box,
    correlators_of_deterministic_box,
    local_box,
    mixture_correlators,
    verify_local_realization,
)

for kind in LOCAL_KINDS:
    box = local_box(LocalBoxSpec(kind, a0=1))
    table = {f"{i.name},{j.name}": box.respond(i, j) for i in AliceInput for j in BobInput}
    corr = [str(c) for c in correlators_of_deterministic_box(box)]
    print(kind.value, "S =", chsh_of_deterministic_box(box), "correlators", corr)
    print("   ", table)

# %% [markdown]
# Mixed in equal proportions the four boxes give the same magnitude on every
# correlator, so no single correlator stands out.

# %%
mix = mixture_correlators({LocalBoxSpec(k): Fraction(1, 4) for k in LOCAL_KINDS})
print("equal mixture:", [str(c) for c in mix])

# %% [markdown]
# X1 and X2 can be built from unentangled product states by choosing what
# each input measures.

# %%
for kind in LOCAL_KINDS[:2]:
    for a0 in (1, -1):
        print(kind.value, a0, verify_local_realization(LocalBoxSpec(kind, a0)))
