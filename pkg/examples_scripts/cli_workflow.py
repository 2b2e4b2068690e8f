# %% [markdown]
# # Running experiments from a config file
#
# `fkl run` fits one split and writes JSON and TSV documents; `fkl splits`
# repeats over seeds and aggregates. The same entry point is callable from
# Python, which is what this script does.

# %%
import json
import os
import tempfile
from pathlib import Path

from fkl import cli

root = Path(tempfile.mkdtemp())
os.environ["FKL_OUTPUT_ROOT"] = str(root)
cfg = root / "airline.yaml"
cfg.write_text("""
name: airline-quick
dataset: {fixture: airline}
split: {scheme: extrapolate_tail, k: 48}
train: {rounds: 5, freq_scale: 6.283185307179586, init_noise: 0.001}
baselines: [rbf]
""")
cli.main(["validate", str(cfg)])

# %%
cli.main(["run", str(cfg)])
run_dir = next(root.glob("airline-quick*/**/metrics.json")).parent
sorted(p.name for p in run_dir.iterdir())

# %%
metrics = json.loads((run_dir / "metrics.json").read_text())
print(metrics["n_train"], metrics["n_test"], metrics["fkl"]["rmse"], metrics["baselines"]["rbf"]["rmse"])

# %% [markdown]
# Plot documents can be regenerated from the checkpoint alone.

# %%
cli.main(["plotdata", str(run_dir)])
print((run_dir / "spectrum.tsv").read_text().splitlines()[:4])
