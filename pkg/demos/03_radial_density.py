"""Where the excitation sits after writing.

For each radius we optimise A, then compare the per-ion spin excitation
|S_j|^2/n_j with the probe intensity profile.  In a large crystal under a
mode-matched control the stored excitation spreads outward beyond the
probe profile.
"""

import numpy as np

from cavity_eit import SimulationConfig, optimize_amplitude, radial_excitation_density

W = 37e-6
for ratio in (0.5, 0.95, 2.7):
    cfg = SimulationConfig.baseline(extended=False, radius=ratio * W)
    opt = optimize_amplitude(cfg)
    r, s = radial_excitation_density(opt.result.S_final_write, opt.result.grid)
    n = opt.result.grid.populations
    ref = cfg.probe(r) ** 2
    ref *= np.dot(n, s) / np.dot(n, ref)
    rms = np.sqrt(np.dot(n * s, r**2) / np.dot(n, s)) * 1e6
    rms_ref = np.sqrt(np.dot(n * ref, r**2) / np.dot(n, ref)) * 1e6
    print(f"R = {ratio} w_p: A_opt {opt.A_opt:.2f}, eta_w {opt.result.eta_w:.3f}, "
          f"rms radius {rms:.1f} um (probe reference {rms_ref:.1f} um)")
