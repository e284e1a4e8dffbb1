"""Optimised efficiency as the crystal radius grows past the probe waist.

With an extended control, more ions only help, so the curve rises and
saturates.  With a control matched to the probe mode, ions in the probe
tail are poorly controlled and the efficiency peaks near R = 0.95 w_p.
"""

import numpy as np

from cavity_eit import SimulationConfig, sweep_radius
from cavity_eit.experiments import peak_row, refine_peak

W = 37e-6
ratios = np.round(np.arange(0.2, 3.01, 0.2), 1)

ext = sweep_radius(SimulationConfig.baseline(extended=True), ratios * W)
fin = sweep_radius(SimulationConfig.baseline(extended=False), ratios * W)

print(" R/w_p   N_eff    C     ext eta   fin eta   fin A_opt")
for r, e, f in zip(ratios, ext, fin):
    print(f"{r:5.1f} {e.N_eff:8.0f} {e.C:6.2f}   {e.eta_tot:.4f}    {f.eta_tot:.4f}    {f.A_opt:.2f}")

best = peak_row(fin)
print(f"finite-control peak near R = {refine_peak(fin) / 37:.2f} w_p, eta_tot = {best.eta_tot:.4f}")
