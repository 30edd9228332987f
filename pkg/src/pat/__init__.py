"""Photoacoustic tomography in 2D with variable sound speed.

Forward solves couple P2 finite elements inside the disk to a
convolution-quadrature boundary integral outside it.  Reconstruction uses
Landweber iteration with the discrepancy principle, time reversal, or the
Neumann series built on time reversal.
"""
from .geometry import BoundaryGrid, TriMesh, generate_disk_mesh, validate_mesh
from .fem import NodalField, P2BubbleSpace
from .wavesolver import TimeGrid
from .operators import BoundaryTrace, OperatorSetup, adjoint_L, forward_L
from .phantoms import SpeedField, estimate_T0, make_phantom, make_speed
from .recon import LandweberConfig, estimate_omega, landweber, neumann_series, time_reversal

__version__ = "0.1.0"
