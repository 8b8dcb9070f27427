"""Joint density matrices with prescribed overlapping marginals.

Given states rho12 on factors (1,2) and rho23 on factors (2,3) that
agree on the shared middle factor, the package decides whether a joint
state rho123 with those two reductions exists, constructs one when a
recipe applies, and produces nullspace certificates when none can.
"""

__version__ = "0.1.0"

from .states import CompatiblePair, DensityMatrix, density, entropy, marginal
from .criteria import check_compatible, entropy_report, necessary_conditions

__all__ = [
    "CompatiblePair",
    "DensityMatrix",
    "density",
    "entropy",
    "marginal",
    "check_compatible",
    "entropy_report",
    "necessary_conditions",
    "__version__",
]
