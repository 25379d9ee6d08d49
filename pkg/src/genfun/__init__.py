"""Midpoint generating functions for symplectic maps.

Implicit midpoint construction of symplectic maps from scalar generating
functions on flat phase spaces and on the unit sphere, the Cayley form for
quadratic generators, composition through signed triangle areas, and the
matching oscillatory-kernel (star product) layer.
"""

from .affine import (BUILTIN_HAMILTONIANS, MidpointTriple, PendulumHamiltonian,
                     PolynomialHamiltonian, QuadraticHamiltonian,
                     ScaledHamiltonian, SymplecticStructure, Triangle,
                     cotangent_to_pair, hamiltonian_displacement,
                     hamiltonian_from_dict, hamiltonian_to_dict, midpoints_of,
                     pair_to_cotangent, standard_omega, triangle_area,
                     vertices_from_midpoints, zero_hamiltonian)
from .composition import (ORIENTATION, CompositionProblem, CompositionValue,
                          compose_genfun_numeric, compose_quadratic_closed,
                          composed_gradient, triangle_functional,
                          verify_composition)
from .errors import (AntipodalPair, CayleySingular, ConfigInvalid,
                     DegenerateConfiguration, DegeneratePhase,
                     DimensionMismatch, GenfunError, MultipleRootSuspected,
                     NoConvergence, NonFiniteValue, NotTangent,
                     SingularJacobian, TangentTooLong)
from .midpoint import (MidpointMap, OrderFit, cayley_map_quadratic,
                       genfun_of_linear_map, infinitesimal_order,
                       linear_hamiltonian_matrix, midpoint_family, phi_forward,
                       phi_inverse, reference_flow, symplecticity_defect)
from .moyal import (ExactComplex, PolynomialSymbol, gaussian_phase_product,
                    moyal_kernel, poisson_bracket, star_product_poly)
from .numerics import SolveReport, SolverConfig, fd_jacobian, solve_newton
from .sphere import (AmbientPolynomialSphereHamiltonian,
                     CallableSphereHamiltonian, LinearSphereHamiltonian,
                     SphereCompositionValue, TangentAt,
                     area_jacobian_determinant, geodesic_midpoint,
                     pair_to_tangent, point_symmetry, pullback_defect,
                     rotate_sphere_hamiltonian, scale_sphere_hamiltonian,
                     sphere_compose_genfun, sphere_hamiltonian_from_dict,
                     sphere_hamiltonian_json, sphere_hamiltonian_vector,
                     sphere_infinitesimal_order, sphere_phi_forward,
                     sphere_reference_flow, sphere_verify_composition,
                     spherical_triangle_area, spherical_vertices_from_midpoints,
                     surface_gradient, tangent_frame, tangent_to_pair,
                     unit_vector)

__version__ = "0.1.0"
