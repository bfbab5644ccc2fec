# %% [markdown]
# Choosing hyperparameters with the robust CV
# -------------------------------------------
# The search picks the number of trusted directions first, then how much of the
# robust component to add, and only keeps it if it clearly helps.

# %%
import numpy as np

from rolin import CVConfig, LabeledDataset, robust_cv

rng = np.random.default_rng(3)
n, p = 20, 12
y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
X = rng.normal(size=(n, p))
X[:, 0] += 1.5 * y
X[:, 1:4] += 0.4 * y[:, None]
data = LabeledDataset(X, y)

psi, diag = robust_cv(data, "logistic", CVConfig(seed=1))
print("chosen:", psi)

# %%
# Holdout/training loss ratio as k grows. The search stops at the first k whose
# ratio passes the threshold (5 by default).
for normalize, trace in diag.ratio_trace.items():
    print("normalize" if normalize else "raw      ", np.round(trace, 2), "-> k_max", diag.k_max[normalize])

# %%
# The best subspace-only choice vs the best choice with a robust part.
print("subspace only:", diag.psi_s0_rob)
print("with robust part:", diag.psi_rob)

scores = {s.psi: s for s in diag.all_scores()}
print("costs", round(scores[diag.psi_s0_rob].cost, 4), round(scores[diag.psi_rob].cost, 4))

# %%
# Everything that was scored can be dumped for a closer look.
diag.to_csv("model_selection_candidates.csv")
print(open("model_selection_candidates.csv").read().splitlines()[:4])
