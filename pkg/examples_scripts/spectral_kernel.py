# %% [markdown]
# # From a spectral density to a kernel
#
# A positive density on an evenly spaced frequency grid defines a stationary
# kernel through a trapezoid cosine sum. Here we build a grid, put a Gaussian
# bump on it and compare the kernel with the closed form.

# %%
import numpy as np

from fkl import spectral

grid = spectral.build_grid(tau_max=5.0, count=100, freq_scale=1.0)
grid.period, grid.delta_omega, grid.omegas[-1]

# %%
w, mu, s = 1.0, 0.2, 0.05
density = w / (np.sqrt(2 * np.pi) * s) * np.exp(-0.5 * ((grid.omegas - mu) / s) ** 2)
kernel = spectral.SpectralKernel(grid, density)

tau = np.linspace(0, 5, 6)
closed = w * np.exp(-2 * np.pi**2 * s**2 * tau**2) * np.cos(2 * np.pi * mu * tau)
print(np.round(kernel(tau), 5))
print(np.round(closed, 5))

# %% [markdown]
# A latent log-density maps to a kernel the same way; g = 0 is the flat
# density used to start training.

# %%
flat = spectral.kernel_from_latent(np.zeros(grid.count), grid)
print(flat.variance, flat(np.array([0.0, 1.0, 2.0])))
