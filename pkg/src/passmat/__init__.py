"""Matrix-valued passivity indices for MIMO LTI systems.

Subpackages:

- :mod:`passmat.symmat` -- symmetric/Hermitian matrix kernel
- :mod:`passmat.lti` -- state-space systems and frequency-domain samples
- :mod:`passmat.sdpcore` -- small dense semidefinite-program solver
- :mod:`passmat.passivity` -- index LMIs, selection principles, verification
- :mod:`passmat.interconnect` -- certificate algebra and stability theorems
- :mod:`passmat.dissipop` -- dissipativity-operator spectral analysis
- :mod:`passmat.smib` -- single-machine infinite-bus case study
- :mod:`passmat.cli` -- command-line frontend
"""

__version__ = "0.1.0"

from .lti import FrequencyGrid, StateSpace, default_grid
from .passivity import (
    CertKind,
    PassivityCertificate,
    Provenance,
    compute_ifofp,
    compute_ifpm,
    compute_ofpm,
    scalar_indices,
    static_ifpm,
    verify_certificate,
)
from .symmat import HermitianMatrix, SymmetricMatrix

__all__ = [
    "__version__",
    "FrequencyGrid",
    "StateSpace",
    "default_grid",
    "CertKind",
    "PassivityCertificate",
    "Provenance",
    "compute_ifofp",
    "compute_ifpm",
    "compute_ofpm",
    "scalar_indices",
    "static_ifpm",
    "verify_certificate",
    "HermitianMatrix",
    "SymmetricMatrix",
]
