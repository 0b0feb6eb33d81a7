# %% [markdown]
# # The focused laser and the light-shift landscape
#
# A 421 nm beam is focused through a 20 mm lens onto one lattice site (A).
# Its Airy-shaped intensity shifts the two hyperfine qubit states by different
# amounts, so the microwave resonance of A moves away from its neighbours'.

# %%
import numpy as np

from latticeaddr import lightshift as ls, optics
from latticeaddr.model import make_units

LAMBDA = 850e-9
units = make_units(LAMBDA)
geom = optics.DEFAULT_GEOMETRY
print(f"recoil frequency E_r/h = {units.recoil_frequency / (2 * np.pi):.1f} Hz")

# %% [markdown]
# ## Intensity profile
# The pupil integral is evaluated without the paraxial simplification.  The
# first dark ring sits a little beyond one lattice spacing from the centre.

# %%
profile = optics.intensity_map(geom, 1.5 * LAMBDA, 301)
r_min = optics.first_minimum(geom)
print(f"I(lambda/2)/I(0)   = {optics.airy_relative_intensity(geom, LAMBDA / 2):.10f}")
print(f"first minimum      = {r_min / LAMBDA:.5f} lambda")

fit = optics.effective_gaussian_waist(profile)
print(f"effective waist    = {fit.waist / LAMBDA:.4f} lambda (rms residual {fit.rms_residual:.3g})")

# the Airy tail is broader than the fitted Gaussian
r = profile.radii[profile.radii > r_min]
gauss = np.exp(-2 * r**2 / fit.waist**2)
print(f"tail excess beyond first minimum: {np.max(profile.values[profile.radii > r_min] - gauss):.3g}")

# %% [markdown]
# ## Shifts and microwave detuning
# The splitting at the focus is calibrated to 107 E_r; the line data only sets
# the ratio of the two shifts and the laser detuning.

# %%
lines = ls.bundled_lines("rb87_6p")
shifts = ls.shift_map(profile, lines, units, ls.Calibration("calibrated", 107.0))
print(f"dE0(0) = {shifts.peak_shift0:.3f} Er, dE1(0) = {shifts.peak_shift1:.3f} Er")
print(f"laser detuning from 6P3/2 = {shifts.laser_detuning / (2 * np.pi * 1e9):.1f} GHz")
for rr in (0.0, 0.25, 0.5, 0.7071, 1.0):
    print(f"  r = {rr:6.4f} lambda   delta = {float(shifts.detuning_at(rr)):8.3f} Er/hbar")

# %% [markdown]
# ## The barrier that keeps B in place
# In a 50 E_r lattice the attractive |0> shift tilts the potential towards A.
# The lowest escape barrier for an atom on site B is what limits the ramp.

# %%
barrier = ls.site_barrier(shifts, 50.0, state=0)
print(f"barrier for B, |0>: {barrier.height:.3f} Er via {barrier.path}")
print(f"barrier for B, |1>: {ls.site_barrier(shifts, 50.0, state=1).height:.3f} Er")

pm = ls.potential_map(50.0, shifts, half_width=1.0, resolution=41)
print(f"potential map {pm.v0.shape}, min V0 = {pm.v0.min():.2f} Er at the focus")
