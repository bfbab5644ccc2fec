# %% [markdown]
# Comparing against the usual baselines
# -------------------------------------
# Same protocol as the `rolin benchmark` command: many random splits with a small
# training set, each method tunes itself on the training rows only, and we report
# trimmed means of the test loss. Uses the breast cancer table that ships with
# scikit-learn; a short run (10 repetitions) takes a couple of minutes.

# %%
import numpy as np
from sklearn.datasets import load_breast_cancer

from rolin import LabeledDataset
from rolin.bench import ExperimentSpec, run_experiment, summarize

raw = load_breast_cancer()
data = LabeledDataset(raw.data, np.where(raw.target == 1, 1.0, -1.0), tuple(raw.feature_names))

spec = ExperimentSpec(train_sizes=(15,), repetitions=10, trim_count=1, base_seed=0)
report = run_experiment(spec, data)

# %%
for row in summarize(report):
    if row["metric"] == "logistic":
        print(f"{row['method']:8s} n={row['n']}  trimmed mean {row['trimmed_mean']:.3f}  "
              f"range [{row['min']:.3f}, {row['max']:.3f}]")

# %%
# Every method saw exactly the same splits.
digests = {c["method"]: c["split_digests"] for c in report["cells"]}
print(len({tuple(d) for d in digests.values()}) == 1)
