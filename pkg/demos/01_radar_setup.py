"""
Radar setup: desired beampattern and interference bound
=======================================================

Builds the bundled eight-antenna scenario, looks at the desired pattern that
the joint designs try to match, and tabulates the precoder-free lower bound
on how much a radar beam steered at an angle leaks into the users.

Run with ``python demos/01_radar_setup.py``.
"""

import numpy as np

from rsma_dfrc import radar
from rsma_dfrc.scenario import PAPER_TARGETS, paper_scenario, rectangular_template

scenario = paper_scenario()
print(f"{scenario.n_tx} antennas, {scenario.k_users} users, "
      f"P_t = {scenario.power_budget:g} (noise power 1), {len(scenario.grid)} grid angles")

###############################################################################
# The desired pattern is the one achieved by a radar-only design with the
# per-antenna power constraint, so it is attainable by construction.

levels = scenario.desired.levels
angles = scenario.grid.angles
template = rectangular_template(scenario.grid, PAPER_TARGETS)
print(f"mainlobe mean {levels[template > 0].mean():.1f}, "
      f"sidelobe mean {levels[template == 0].mean():.2f}")
for lo, hi in PAPER_TARGETS:
    inside = (angles >= lo) & (angles <= hi)
    print(f"  target [{lo:+g}, {hi:+g}] deg: peak {levels[inside].max():.1f}")

###############################################################################
# Lower bound on the interference-to-beampattern ratio.  Small values mean
# a beam towards that angle can be formed with little leakage to the users.

lb = radar.lb_ibr(scenario.channels, angles, scenario.geometry)
for theta in (-50, -20, 0, 20, 50):
    i = int(np.argmin(np.abs(angles - theta)))
    print(f"LB-IBR at {theta:+3d} deg: {10 * np.log10(lb[i]):6.2f} dB")
best = angles[int(np.argmin(lb))]
print(f"least leaky direction: {best:+.0f} deg")
