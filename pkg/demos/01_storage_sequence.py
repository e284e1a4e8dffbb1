"""Write, store and read a single-photon pulse in the ion crystal.

The extended control field covers the whole crystal, so the memory should
come close to the cooperativity bound (2C/(1+2C))^2.  We then narrow the
control to the probe waist and watch the write efficiency drop: the outer
ions see the probe but not the control and reflect part of the pulse.
"""

import numpy as np

from cavity_eit import SimulationConfig, analytic_optimal_efficiency, run_sequence

ext = run_sequence(SimulationConfig.baseline(extended=True))
print(f"N = {ext.n_eff:.0f}, C = {ext.C:.2f}")
print(f"extended control: eta_w {ext.eta_w:.4f}  eta_r {ext.eta_r:.4f}  eta_tot {ext.eta_tot:.4f}")
print(f"cooperativity bound: {analytic_optimal_efficiency(ext.C):.4f}")

fin = run_sequence(SimulationConfig.baseline(extended=False, A=1.0))
write = fin.times <= 10e-6
reflected = np.trapezoid(np.abs(fin.a_out[write]) ** 2, fin.times[write])
print(f"finite control, A=1: eta_w {fin.eta_w:.4f}  eta_tot {fin.eta_tot:.4f}")
print(f"  photons reflected during writing: {reflected:.3f}")

# coarse text trace of the retrieved pulse, extended control
t_us = ext.times * 1e6
for t in np.arange(26, 35, 0.5):
    i = np.searchsorted(t_us, t)
    bar = "#" * int(60 * np.abs(ext.a_out[i]) ** 2 / np.max(np.abs(ext.a_out) ** 2))
    print(f"{t:5.1f} us |{bar}")
