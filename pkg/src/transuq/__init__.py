"""Uncertainty and policy-robustness toolkit for power-sector transition runs.

Workflow: design a space-filling sample over techno-economic and policy
inputs, run the diffusion simulator on each point, fit Gaussian-process
emulators to the scalar outputs, then screen sensitivities and propagate
input distributions to policy robustness scores.
"""

__version__ = "0.1.0"

from .space import (
    DesignMatrix,
    InputDef,
    ParameterSpace,
    PhysicalInputs,
    PolicyAnchors,
    PolicyLevels,
    SpaceError,
    Violation,
    default_space,
    denormalize,
    lhs_sample,
    load_design,
    load_space,
    save_design,
    save_space,
    validate_space,
)

__all__ = [
    "DesignMatrix",
    "InputDef",
    "ParameterSpace",
    "PhysicalInputs",
    "PolicyAnchors",
    "PolicyLevels",
    "SpaceError",
    "Violation",
    "default_space",
    "denormalize",
    "lhs_sample",
    "load_design",
    "load_space",
    "save_design",
    "save_space",
    "validate_space",
    "__version__",
]
