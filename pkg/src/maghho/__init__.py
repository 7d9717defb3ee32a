"""Hybrid high-order solver for the 2D magnetic Schrodinger equation.

Polytopal meshes, a gauge-covariant discrete gradient, sparse Hermitian
eigen/source solvers, and a Crank-Nicolson propagator, plus experiment
drivers for convergence, Fock-Darwin spectra, gauge-deviation decay and
the Aharonov-Bohm interference test.
"""

from .mesh import (BOUNDARY, MeshCell, MeshError, MeshFace, MeshFormatError,
                   PolytopalMesh, export_mesh, generate_cartesian,
                   generate_punctured, import_mesh, mesh_from_cells, validate)
from .functional import (CellBasis, FaceBasis, Projector, QuadratureRule,
                         cell_basis_for, face_basis_for, l2_project_cell,
                         l2_project_face, polygon_quadrature,
                         segment_quadrature)
from .local_ops import (CellContext, FieldSpec, LocalDofLayout,
                        LocalOperators, covariant_gradient,
                        covariant_gradient_cheap, gauge_transform_local,
                        interpolate_local, local_form,
                        potential_reconstruction, stabilization,
                        stabilization_energy)
from .assembly import (GlobalDofMap, HermitianSystem, HybridField, assemble,
                       assemble_rhs, dump_system, l2_norm_cells, norm_1h,
                       static_condense)
from .solvers import (CrankNicolson, EigenResult, Factorization, SolverError,
                      evolve, lowest_eigenpairs, lowest_eigenpairs_system,
                      solve, solve_condensed)
from .physics import (ABConfig, FockDarwinConfig, GaugeCase, ManufacturedCase,
                      ab_vector_potential, default_manufactured,
                      fock_darwin_energy, fock_darwin_levels, gauge,
                      gaussian_packet, harmonic_potential, harmonic_sup,
                      manufactured_source)
from .vtkio import write_vtk

__version__ = "0.1.0"
