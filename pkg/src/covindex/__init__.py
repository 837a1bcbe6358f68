"""covindex: a numerical laboratory for convex-covering indices of
finite-dimensional sequence-space models.

Kernels: block-norm spaces (`space`), oracle-backed convex bodies (`body`),
codimension-budgeted inradius certificates (`inradius`), explicit ball
coverings (`cover`), slab-model derivation depth (`derive`), and experiment
drivers (`study`) behind the `covindex` CLI.
"""

from .kernels import COMPILED, backend_name

__all__ = ["COMPILED", "backend_name"]
__version__ = "0.1.0"
