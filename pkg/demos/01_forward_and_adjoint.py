# # Forward operator and its adjoint
#
# A pressure bump in a disk of radius 1 with variable sound speed. We
# record its trace on the circle, check that the wave leaves through the
# transparent boundary, and compare <L f, h> with <f, L* h>.

import numpy as np

from pat.geometry import generate_disk_mesh
from pat.operators import OperatorSetup, adjoint_L, forward_L, l2_sigma_inner, smooth_probe_pair
from pat.phantoms import estimate_T0, gaussian_bump, make_speed
from pat.wavesolver import TimeGrid

# ## Speed field and travel time

c = make_speed("nontrapping")
T0 = estimate_T0(c, 0.01)
print("c at the origin:", float(c(np.zeros(2))))
print("c range:", c.c_min, c.c_max)
print("T0 =", T0)

# ## One forward solve

h = 0.1
grid = TimeGrid.from_step(1.2 * T0, h / (15 * c.c_max))
setup = OperatorSetup(generate_disk_mesh(1.0, h), c, grid)
print(setup.mesh.n_triangles, "triangles,", setup.boundary.n, "boundary nodes,", grid.N, "steps")

f = setup.project(lambda x: gaussian_bump(x, (0.3, -0.2), 0.12))
rec = setup.solver.run(f.coefficients, track_energy=True)
e = rec.energy[:-1]
print("energy left at T: %.2e of the start" % (e[-1] / e[0]))

m = forward_L(f, setup)
peak_step, peak_node = np.unravel_index(np.argmax(m.values), m.values.shape)
print("trace peaks at t = %.3f on node %d" % (peak_step * grid.dt, peak_node))

# ## Adjoint identity
#
# L* is built from the continuous adjoint, so the two inner products agree
# up to discretization error. The gap shrinks as the mesh is refined.

for hh in (0.2, 0.14, 0.1):
    s = OperatorSetup(generate_disk_mesh(1.0, hh), c, TimeGrid.from_step(0.8, hh / 15))
    fp, hp = smooth_probe_pair(s, seed=0)
    lhs = l2_sigma_inner(forward_L(fp, s), hp)
    rhs = fp.coefficients @ (s.ops.A @ adjoint_L(hp, s).coefficients)
    print("h = %.2f   <Lf,h> = %+.6f   <f,L*h> = %+.6f" % (hh, lhs, rhs))
