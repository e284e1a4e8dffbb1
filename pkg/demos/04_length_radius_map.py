"""Total efficiency over crystal length and radius, printed as a table."""

import numpy as np

from cavity_eit import SimulationConfig, sweep_dimensions
from cavity_eit.experiments import rows_to_grid

W = 37e-6
L = [1e-3, 2e-3, 3e-3, 4e-3, 5e-3]
ratios = (0.25, 0.5, 0.75, 0.95, 1.25, 1.75, 2.5)

for extended in (True, False):
    rows = sweep_dimensions(SimulationConfig.baseline(extended=extended), L, [r * W for r in ratios])
    L_mm, _, eta = rows_to_grid(rows)
    print("extended control" if extended else "mode-matched control")
    print("L [mm] \\ R/w_p " + " ".join(f"{r:6.2f}" for r in ratios))
    for Lm, row in zip(L_mm, eta):
        print(f"{Lm:14.1f} " + " ".join(f"{v:6.3f}" for v in row))
    print()
