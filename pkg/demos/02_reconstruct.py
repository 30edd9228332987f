# # Reconstruction on a short window
#
# Data come from a finer simulation mesh and are resampled onto the
# reconstruction mesh, so no method sees its own discretization. The
# window is T = 1.2 T0 for both speed fields.

import sys
from pathlib import Path

import numpy as np

from pat.geometry import generate_disk_mesh
from pat.operators import OperatorSetup, forward_L, resample_trace
from pat.phantoms import estimate_T0, export_raster, make_phantom, make_speed
from pat.recon import LandweberConfig, estimate_omega, landweber, neumann_series, relative_error, time_reversal
from pat.wavesolver import TimeGrid

h_sim, h_rec = 0.06, 0.1
out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)


def raster(field, n=200):
    g = np.linspace(-1, 1, n)
    X, Y = np.meshgrid(g, g[::-1])
    return field.evaluate(np.column_stack([X.ravel(), Y.ravel()])).reshape(n, n)


for kind in ("nontrapping", "trapping"):
    c = make_speed(kind)
    T = 1.2 * estimate_T0(c, 0.005)
    phantom = make_phantom("ghosts", 2 * h_sim)

    sim = OperatorSetup(generate_disk_mesh(1.0, h_sim), c, TimeGrid.from_step(T, h_sim / (15 * c.c_max)))
    m_fine = forward_L(sim.project(phantom), sim)

    rec = OperatorSetup(generate_disk_mesh(1.0, h_rec), c, TimeGrid.from_step(T, h_rec / (14 * c.c_max)))
    m = resample_trace(m_fine, rec.boundary.n, rec.grid)
    truth = rec.project(phantom)

    # ## The three methods
    results = {
        "time reversal": time_reversal(m, rec, "plain"),
        "harmonic time reversal": time_reversal(m, rec, "harmonic"),
        "Neumann series J=5": neumann_series(m, rec, 5),
    }
    omega = estimate_omega(rec, 10).omega
    lw = landweber(m, rec, LandweberConfig(omega, k_max=20), f_true=truth)
    results["Landweber 20"] = lw.final

    print(f"{kind}: T = {T:.3f}, omega = {omega:.3f}")
    for name, f in results.items():
        print(f"   {name:24s} relative L2 error {relative_error(f, truth):.3f}")
        export_raster(raster(f), out / f"{kind}_{name.split()[0].lower()}", label=name)
    print("   residual every 5 steps:", np.round(lw.residuals[::5], 5))
    export_raster(raster(truth), out / f"{kind}_phantom", label="phantom")

print("images in", out.resolve())
