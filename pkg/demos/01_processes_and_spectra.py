"""Moving-average processes, their spectral densities, and subsampling."""

# %%
# A power-law model: coefficients decay like |j|^-2 with random rotations,
# then get rescaled so that every X_k is a standard normal vector.
import numpy as np

from mdplab import process as P

model = P.power_law_model(d=2, eps=0.5, J=64, seed=1)
print("normalization error", model.normalization_error())
print("tail bound", model.tail_bound, " truncation tail", model.truncation_tail())

# %%
# The spectral density integrates to the identity, matching unit variance.
f = P.spectral_from_coeffs(model, K=4096)
print("integral of f:\n", f.integral().real.round(12))
print("smallest eigenvalue over the grid", f.min_eigenvalues().min())

# %%
# Paths split exactly into a part driven by noise at indices <= 0 and a
# part driven by indices > 0.
s = P.split(model, 200, seed=3, start=-99)
print("values == past + future:", np.array_equal(s.values, s.past + s.future))
print("past part at k = 100:", s.past[-1], " future part at k = -99:", s.future[0])

# %%
# MA(1) with equal weights: f vanishes at theta = pi, so no sigma > 0
# works at m = 1, but the two-step subsampled density is flat.
ma1 = P.normalize_model([0.0, 1.0, 1.0], 0.5)
f1 = P.spectral_from_coeffs(ma1, 4096)
f2 = P.subsampled_spectral(f1, 2)
print("f_1(pi) =", f1.values[0, 0, 0].real)
print("f_2 range:", f2.values.real.min(), f2.values.real.max(), " 1/(2 pi) =", 1 / (2 * np.pi))
print("smallest admissible m for sigma = 0.5:", P.min_subsampling(f1, 0.5))
