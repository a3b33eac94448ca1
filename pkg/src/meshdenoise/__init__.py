"""Graph-based mesh denoising, sparse Cholesky and entropic optimal transport."""

from ._backend import BACKEND
from .bench import SweepGrid, SweepRecord, SweepReport, Timing, run_sweep, time_method
from .cholesky import (CholeskyFactor, NotPositiveDefiniteError, cholesky_solve,
                       sparse_cholesky)
from .denoise import (FilterParams, HeatParams, HeatStabilityWarning, SobolevParams,
                      SobolevSolver, centroid, filter_denoise, heat_denoise, sobolev_denoise)
from .graph import (CSRMatrix, MeshGraph, adjacency, degrees, laplacian, normalized_adjacency,
                    normalized_laplacian, spmm)
from .mesh import (EdgeSet, Mesh, MeshFormatError, NormalField, extract_edges, geodesic_sphere,
                   icosahedron, icosphere, parse_obj, parse_off, read_mesh, vertex_normals,
                   write_mesh, write_obj, write_off)
from .noise import NoiseParams, add_normal_noise, snr
from .transport import (KernelUnderflowWarning, SinkhornError, SinkhornState, TransportPlan,
                        barycenter, entropy, gibbs_kernel, kl_divergence, monge_bruteforce,
                        sinkhorn, sinkhorn_log, transport_cost, wasserstein_p)

__version__ = "0.1.0"
