"""
Scoring representations on an image set
=======================================

Runs the full grid on synthetic textures and prints the ranking.
Artifacts are written to a temporary directory.
"""

import tempfile
from pathlib import Path

from repscore import GridSpec, RidgeConfig, run_grid, write_grid
from repscore.dataset import make_texture_classification, split_dataset

ds = split_dataset(make_texture_classification(n_per_class=80, size=32, seed=0), (0.8, 0.1, 0.1), seed=0)
spec = GridSpec(ds, modes=("dense", "conv_tile"), ridge=RidgeConfig(runs=5))
result = run_grid(spec)

out = write_grid(result, Path(tempfile.mkdtemp()) / "grid", spec)
print((out / "ranking.txt").read_text())

# Full-frame DCT is an orthogonal rotation of the pixels, so an isotropic
# ridge fit reaches the same training loss under DCT as under RGB.
for mode in spec.modes:
    print(mode, result.report(ds.name, "rgb", mode).train_loss, result.report(ds.name, "dct", mode).train_loss)
