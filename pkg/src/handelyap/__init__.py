"""Piecewise-polynomial Lyapunov certificates on polytopes via Handelman LPs."""
from .certify import Certificate, NotFound, search_certificate, verify_certificate
from .geometry import DDecomposition, Polytope, decompose, named_shape, scale_polytope
from .handelman import assemble_lp
from .lpsolve import BACKEND, solve
from .poly import Polynomial, VectorField, van_der_pol
from .roa import level_set, maximize_scale

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Certificate",
    "DDecomposition",
    "NotFound",
    "Polynomial",
    "Polytope",
    "VectorField",
    "assemble_lp",
    "decompose",
    "level_set",
    "maximize_scale",
    "named_shape",
    "scale_polytope",
    "search_certificate",
    "solve",
    "van_der_pol",
    "verify_certificate",
]
