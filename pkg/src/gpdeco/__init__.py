"""Geometric phase of an open two-level system under pure dephasing."""

__version__ = "0.1.0"

from .gp import GPResult, geometric_phase, gp_correction, unitary_phase  # noqa: E402
from .qstate import SystemParams, build_eigenpath, density_from_angle, evolve_dephasing  # noqa: E402

__all__ = [
    "GPResult",
    "SystemParams",
    "build_eigenpath",
    "density_from_angle",
    "evolve_dephasing",
    "geometric_phase",
    "gp_correction",
    "unitary_phase",
]
