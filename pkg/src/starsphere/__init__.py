"""Generalized spherical distributions with star-shaped level sets.

Typical use::

    spec = ContourSpec.from_terms(2, [ContourTerm("constant"), ContourTerm("lp_norm", p=1)])
    fc = finish_contour(spec, k=4)
    dist = GenSphereDist(fc, RadialLaw.gamma(2, 1))
    dist.density([[1.0, 0.5]])
    dist.sample(1000, np.random.default_rng(0))
"""
from .contour import ContourSpec, ContourTerm, bump_centers, eval_contour, eval_term
from .cubature import WeightedTessellation, integrate_sphere, norming_constant, simplex_rule
from .distribution import FinishedContour, GenSphereDist, density_at, finish_contour, gauge, simulate
from .errors import (
    DegenerateContourError,
    DegenerateGeometryError,
    InvalidArgumentError,
    NumericDomainError,
    StarSphereError,
    UnsupportedFormatError,
)
from .mesh import SurfaceMesh, SurfaceSimplex, mesh_export, radial_containment, refine_at_point, unit_sphere_mesh
from .radial import RadialLaw, radial_check, radial_g
from .sampler import AliasTable, sample_gensphere, sample_tessellation, sample_unit_simplex

__version__ = "0.1.0"
