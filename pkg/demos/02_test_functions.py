"""Test functions, their envelopes, and the exponential smoothness check."""

# %%
import numpy as np

from mdplab import funcs

F = funcs.make_function("log-norm", 2)
print(F.label, "center", F.center_const)

# %%
# F_r(x) = sup over the ball of radius r. For ln|x| the closed form is
# ln(|x| + r); seeded ball search gives a slightly smaller value.
x = np.array([0.3, -0.4])
print("closed form", funcs.envelope(F, x, 0.2))
print("ball search", funcs.envelope(F, x, funcs.EnvelopeQuery(0.2, "ball-search", 20000)))

# %%
# In two dimensions E exp(F_r - F) at half-scale stays near e^{C r} with a
# moderate C.  The grid maximum is only an empirical lower bound for C.
rep = funcs.estimate_smoothness_constant(F, [[0, 0], [1, 0], [0.5, 0.5]], [0.01, 0.1, 1.0], budget=200_000)
for row in rep.rows:
    print(row)
print("C_hat", rep.C_hat)

# %%
# In one dimension ln|x| is excluded: the same integral near the origin
# blows up as the floor on |x| shrinks.
try:
    funcs.make_function("log-norm", 1)
except ValueError as exc:
    print("rejected:", exc)
probe = funcs.violation_probe_1d_log([0.01, 0.1], budget=100_000)
for t in probe.truncation[:8]:
    print(t)
print("diverging:", probe.diverging)
