# # The command line pipeline
#
# simulate -> reconstruct -> render, driven by one small config file. The
# same steps work from a shell as `pat simulate -c exp.cfg` and so on.

import json
import tempfile
from pathlib import Path

from pat.cli import main

work = Path(tempfile.mkdtemp(prefix="pat_demo_"))
cfg = work / "exp.cfg"
cfg.write_text(
    """
[speed]
kind = trapping
[phantom]
kind = shepp_logan
[simulation]
h = 0.08
T = 1.2 * T0
[reconstruction]
h = 0.12
method = landweber
k_max = 15
noise = 0.02
"""
)

main(["t0", "-c", str(cfg)])

# ## Simulate and look at what got frozen

main(["simulate", "-c", str(cfg), "-o", str(work / "sim")])
print(json.dumps(json.loads((work / "sim" / "manifest.json").read_text())["resolved"], indent=1))

# ## Reconstruct with 2% noise

main(["reconstruct", "-c", str(cfg), "-i", str(work / "sim" / "trace.patr"), "-o", str(work / "rec")])
print((work / "rec" / "report.csv").read_text())

# ## Render the field again at a different size

main(["render", "-i", str(work / "rec" / "recon.paff"), "-o", str(work / "recon_512.pgm"), "--size", "512"])
print(sorted(p.name for p in work.rglob("*") if p.is_file()))
