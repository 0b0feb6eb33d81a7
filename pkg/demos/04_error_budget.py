# %% [markdown]
# # Error budget
#
# Order-of-magnitude estimates for the default scenario: photon scattering on
# the target, tunneling during the operation, focus misalignment and crosstalk
# during state detection.  The ``budget`` CLI subcommand prints the same table.

# %%
import numpy as np

from latticeaddr import cli, config
from latticeaddr import lightshift as ls

sc = cli.Scenario(config.load())
for name, value, unit, ref, lo, hi in cli.budget_rows(sc):
    band = "" if np.isnan(lo) and np.isnan(hi) else f"[{lo:.3g}, {hi:.3g}]"
    print(f"{name:30s} {value:12.5g} {unit:8s} ref {ref:<8g} {band}")

# %% [markdown]
# ## Choosing the focus wavelength
# Between the 6P3/2 and 6P1/2 lines the ratio of differential shift to
# scattering has a maximum close to 421 nm.  Far from both lines the ratio
# grows again, so this is the best choice only near the 6P manifold.

# %%
lines = ls.bundled_lines("rb87_6p")
opt = ls.optimize_wavelength(lines, (420.35e-9, 421.62e-9))
print(f"optimum {opt.wavelength * 1e9:.4f} nm, ratio {opt.ratio:.4g}")
for wl in (400e-9, 415e-9, 421e-9, 430e-9, 460e-9):
    print(f"  {wl * 1e9:5.0f} nm: {ls.splitting_to_scattering(lines, wl):.4g}")

# %% [markdown]
# ## Detection crosstalk
# The neighbour sees I(lambda/2)/I(0) of the detection light, further reduced
# by the detuning of the cycling transition.

# %%
ratio = float(sc.shifts.intensity_at(0.5))
for det_mhz in (20, 27.6, 40):
    x = ls.detection_crosstalk(2 * np.pi * 1.42102628e6, 2 * np.pi * det_mhz * 1e6, ratio)
    print(f"detuning {det_mhz:5.1f} MHz: crosstalk {x:.2e}")
