"""
Transfer maps of the disordered AKLT-type chain
===============================================

Every site carries an angle w.  The site isometry V_w maps the bond space C^2
into C^3 (x) C^2, and expectation values are contracted with the 4 x 4
transfer matrices of b -> V_w^dag (a (x) b) V_w.
"""

import numpy as np

from iidaklt.aklt import EYE2, EYE3, SZ, AngleWindow, aklt_apparatus, channel_distance, isometry, pauli_view, transfer
from iidaklt.apparatus import vec

# The isometry is exact for every angle.
w = 0.6
V = isometry(w)
print("||V^dag V - 1|| =", np.abs(V.conj().T @ V - EYE2).max())

# With a = 1 the transfer map is unital; in the Pauli basis it is diagonal
# with entries 1, sin^2 - cos^2, -sin^2, -sin^2.
T1 = transfer(EYE3, w)
print("unital:", np.allclose(T1 @ vec(EYE2), vec(EYE2)))
print("Pauli view diagonal:", np.round(np.diag(pauli_view(T1)).real, 6))

# Products of these maps approach the replacement channel b -> tr(b)/2 * 1.
# The distance has a closed form that matches a direct operator norm.
for n in (1, 2, 4, 8):
    cd = channel_distance([w] * n)
    print(f"n={n}: formula {cd.formula:.6e}, direct {cd.direct:.6e}")

# The apparatus contracts any local observable.  For <S^z_x S^z_{x+l}> the
# result is -cos^2 w_x cos^2 w_{x+l} times prod (sin^2 - cos^2) of the angles between.
rng = np.random.default_rng(0)
z = rng.uniform(0.1, 0.7, 10)
app = aklt_apparatus(AngleWindow(0, z))
for ell in (1, 3, 6):
    v = app.expect(1, [SZ] + [EYE3] * (ell - 1) + [SZ]).real
    print(f"<SzSz> at distance {ell}: {v:+.6e}")
