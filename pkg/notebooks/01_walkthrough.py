# %% [markdown]
# A small-sample walkthrough
# --------------------------
# Fifteen training rows, forty features. We fit the robust classifier by hand,
# one piece at a time, and then let the library do it in one call.

# %%
import numpy as np

from rolin import HyperParams, LabeledDataset, calc_beta, mean_loss, robust_direction, signed_matrix, thin_svd
from rolin.core import calc_beta_details

rng = np.random.default_rng(0)
p = 40
mu = np.zeros(p)
mu[5:] = 1.0
mu *= 1.2 / np.linalg.norm(mu)
scale = np.ones(p)
scale[:3] = 3.0  # a few loud features that carry no class information


def draw(n):
    y = rng.choice([-1.0, 1.0], size=n)
    return LabeledDataset(rng.normal(size=(n, p)) * scale + y[:, None] * mu, y)


train, test = draw(15), draw(5000)

# %%
# Every row is multiplied by its label. The top singular directions of that
# matrix are where the training loss can be trusted.
Z = signed_matrix(train.features, train.labels)
dec = thin_svd(Z)
print("rank", dec.rank)
print("singular values", np.round(dec.singular_values, 2))

# %%
# Keep the top two directions and look at what is left over.
dec2 = dec.with_split(2)
comp = robust_direction(Z, dec2, sigma_ratio=2.15)
print("robust direction norm", np.linalg.norm(comp.eta))
print("overlap with the top directions", np.abs(dec2.v_s0.T @ comp.eta).max())

# the direction is a ridge fit on the leftover part of the rows
P = dec2.v_rest @ dec2.v_rest.T
Zp = Z @ P
ridge = np.linalg.solve(Zp.T @ Zp + comp.sigma_bound * np.eye(p), Zp.T @ np.ones(len(Z)))
print("cosine with ridge fit", comp.eta @ ridge / np.linalg.norm(ridge))

# %%
# Now the whole fit. b_max caps how far we move along the robust direction.
for psi in [HyperParams(2), HyperParams(2, 2.15, 0.05), HyperParams(2, 2.15, 0.1)]:
    model, comp, _ = calc_beta_details(train, psi, "logistic")
    print(psi, "magnitude", round(comp.magnitude, 4), "test loss", round(mean_loss(model, test, "logistic"), 4))

# %%
# The magnitude sits at the cap each time: with only fifteen rows the search is
# told not to trust this direction very far, even though it points the right way.
# For comparison, what an oracle that knows the generator would get.
from rolin import LinearModel

oracle = LinearModel(0.0, 2 * mu / scale**2, "logistic")
print("oracle test loss", round(mean_loss(oracle, test, "logistic"), 4))
