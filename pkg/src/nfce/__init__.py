"""nfce: near-field wideband channel estimation for subarrayed XL-MIMO arrays.

Subpackages map onto the processing chain:

* :mod:`nfce.model` - array geometry, wavefront models, channel synthesis
* :mod:`nfce.frontend` - analog combining, noisy observation, impairments
* :mod:`nfce.estimator` - delay-domain path estimator and channel rebuild
* :mod:`nfce.planar` - planar-array variant of the parameter decoupling
* :mod:`nfce.runtime` - message-passing execution across local processing units
* :mod:`nfce.bounds` - Fisher information, CRLBs, decoupled lower bounds
* :mod:`nfce.harness` - Monte-Carlo trials, baselines, CSV reporting
* :mod:`nfce.cli` - command-line entry points
"""

from nfce.model import (
    ArrayGeometry,
    PathParams,
    SubcarrierGrid,
    SPEED_OF_LIGHT,
)

__all__ = [
    "ArrayGeometry",
    "PathParams",
    "SubcarrierGrid",
    "SPEED_OF_LIGHT",
]

__version__ = "0.1.0"
