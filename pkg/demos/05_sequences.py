"""Deterministic inequalities for almost-subadditive sequences."""

# %%
import numpy as np

from mdplab.mdp import sequences as S

gen = np.random.default_rng(0)

# %%
# Square-root subadditivity pins a_n / sqrt(n) down to a computable radius.
a = S.sqrt_feasible_sequence(200, 0.05, gen, a1=1.0)
print(S.sqrt_subadditive_check(a, 0.05))
print(S.extrapolate_sqrt_limit(a, C=0.05))

# %%
# Weighted-average recursions: the sup is controlled by C_alpha, and the
# ladder bound at the actual r is much tighter.
for alpha in (0.25, 0.5, 1.0):
    B = S.upper_feasible_sequence(150, alpha, 0.3, gen)
    chk = S.seq_bound_upper(B, alpha, 0.3)
    print(f"alpha={alpha}: max B {chk.extreme:.4f}, ladder bound {chk.ladder_bound:.4f}, "
          f"C_alpha bound {chk.bound:.4g}")
