# %% [markdown]
# # Several inputs: a product of learned kernels
#
# With D inputs the kernel is a product of one-dimensional spectral kernels.
# "multi_input_shared" gives every dimension its own latent draw under one
# set of latent hyperparameters.

# %%
import numpy as np

from fkl import datasets, predict, trainer

raw = datasets.load_fixture("challenger")
train, test = datasets.split(raw, datasets.RandomFraction(0.9, seed=0))
train, test = train.standardize(train), test.standardize(train)
train.inputs.shape, test.inputs.shape

# %%
config = trainer.TrainConfig(mode="multi_input_shared", rounds=5, freq_scale=2 * np.pi, seed=0)
model = trainer.fit_multi_input(train.inputs, train.targets, config)
len(model.grids), model.hp.theta.shape

# %%
mix = predict.predict(model, test.inputs)
stats = (float(np.mean(train.targets)), float(np.var(train.targets)))
report = datasets.metrics(mix, test.targets, stats, strict=False)
print(report.rmse, report.msll)
