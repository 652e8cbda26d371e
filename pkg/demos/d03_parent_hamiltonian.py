"""
Parent Hamiltonian and finite-volume gaps
=========================================

Each bond carries the projector onto the complement of the 4-dimensional
two-site ground space.  The open chain Hamiltonian is frustration free with a
4-dimensional kernel, and its gap shrinks when the angles approach 0.
"""

import numpy as np

from iidaklt.hamiltonian import finite_gap, intersection_report, parent_term

pt = parent_term(0.7, 0.9)
print("rank of h:", int(round(np.trace(pt.h).real)), "residuals:", pt.residuals())

rep = intersection_report(0.7, 0.9, 1.1)
print("three-site intersection:", rep.dim, "sector profile (Sz=-2..2):", rep.profile)

for delta in (0.6, 0.3, 0.1, 0.05):
    g = finite_gap([delta] * 6)
    print(f"constant {delta:4.2f}: e0 {g.e0:+.2e}, gap {g.gap:.6f}, kernel {g.kernel_dim}")

# A run of small angles inside an otherwise generic window lowers the gap.
rng = np.random.default_rng(1)
base = rng.uniform(0.2, 0.7, 8)
rare = base.copy()
rare[2:6] = 0.02
print("gap without run:", finite_gap(base).gap)
print("gap with run   :", finite_gap(rare).gap)
