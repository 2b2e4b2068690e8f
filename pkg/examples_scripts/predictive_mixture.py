# %% [markdown]
# # The predictive mixture
#
# Each retained kernel sample gives a Gaussian posterior; the prediction is
# their equal-weight mixture. Its variance splits into the mean component
# variance plus the spread of the component means.

# %%
import numpy as np

from fkl import predict, trainer

rng = np.random.default_rng(0)
x = np.sort(rng.uniform(-4, 4, 40))
y = np.sin(1.5 * x) + 0.05 * rng.standard_normal(40)
model = trainer.fit(x, y, trainer.TrainConfig(rounds=5, j_samples=20, freq_scale=2 * np.pi))

# %%
xs = np.linspace(-6, 6, 7)
mix = predict.predict(model, xs)
within = mix.variances.mean(0)
between = mix.means.var(0)
print(np.allclose(mix.variance, within + between))

# %%
lo, hi = mix.band(2.0)
q_lo, q_hi = mix.quantile(0.025), mix.quantile(0.975)
print(np.round(np.c_[xs, lo, q_lo, mix.mean, q_hi, hi], 3))

# %% [markdown]
# Dropping the observation noise lowers every component variance by exactly
# the learned noise variance.

# %%
clean = predict.predict(model, xs, include_noise=False)
print(np.max(np.abs(mix.variances - clean.variances - model.hp.noise_var())))
