"""Equivariant toric mirror construction engine.

Exact (rational) computation, to explicit truncation caps, of the objects
attached to a smooth semi-projective toric fan: hypergeometric series and
their Birkhoff factorization, the big mirror map and quantum products, the
Gauss-Manin / Jacobi-ring picture, primitive forms, and the verification
suites that hold all of it together.
"""

from . import cohomology, engine, fans, gaussmanin, series, verify
from .errors import ToricMirrorError

__version__ = "0.1.0"

__all__ = [
    "fans",
    "series",
    "cohomology",
    "engine",
    "gaussmanin",
    "verify",
    "ToricMirrorError",
    "__version__",
]
