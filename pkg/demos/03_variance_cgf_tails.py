"""Asymptotic variance, scaled CGF and tail rates by Monte Carlo."""

# %%
from mdplab import funcs, mdp
from mdplab import process as P

model = P.power_law_model(2, 0.5, 32, 1)
F = funcs.make_function("log-norm", 2)

# %%
# sigma^2 = lim E S_n^2 / n.  The radius comes from the square-root
# subadditivity of a_n = sqrt(E S_n^2) on the grid.
v = mdp.estimate_sigma2(model, F, [32, 64, 128, 256], 4000, seed=1)
for row in v.rows():
    print(row)
print("sigma^2 =", v.sigma2_limit, "+-", v.sigma2_limit_se, " radius", v.radius)

# %%
# The scaled CGF should approach lambda^2/2.  Entries outside the
# small-lambda window or with a tiny effective sample size are flagged.
c = mdp.estimate_scaled_cgf(model, F, 0.25, [-0.3, -0.15, 0.15, 0.3], [64, 256], 4000, seed=2,
                            sigma_hat=v.sigma_hat)
for row in c.rows():
    print({k: (round(x, 4) if isinstance(x, float) else x) for k, x in row.items()})
print("a_n", c.a_n, " b_n", c.b_n)

# %%
# Tail rates against the exact Gaussian value in the white-noise linear case.
lin = funcs.make_function("linear-coordinate", 1)
t = mdp.estimate_tail_rate(P.white_noise(1), lin, 0.25, 0.5, [16, 64], 50_000, seed=3, sigma_hat=1.0)
for n, r, se in zip(t.n_grid, t.rates, t.stderrs):
    print(n, r, "+-", se, " exact", mdp.gaussian_tail_rate(n, 0.25, 0.5))
