"""2D incompressible Euler in vorticity form with a numerical inequality ledger."""

from .biot_savart import KernelCutoff, near_far_split, velocity_direct, velocity_gradient, velocity_spectral
from .errors import CelError, CFLError, ConfigurationError, DomainError, InstabilityError, PreconditionError
from .fields import Grid2D, ScalarField, VelocityField, read_snapshot, sample, write_snapshot
from .flow import FlowMap, GridVelocitySampler, RigidRotation, advance_flow, flow_gradient_bounds, transport_by_characteristics
from .norms import dini_seminorm, modulus_of_continuity, norm_report, sobolev_norm, tail_mass, translation_modulus
from .rearrange import decreasing_rearrangement, distribution_function, lorentz_norm, small_set_concentration
from .solver import Mollifier, Trajectory, cross_validate, mollify, simulate

__version__ = "0.1.0"

__all__ = [
    "CFLError", "CelError", "ConfigurationError", "DomainError", "FlowMap", "Grid2D", "GridVelocitySampler",
    "InstabilityError", "KernelCutoff", "Mollifier", "PreconditionError", "RigidRotation", "ScalarField",
    "Trajectory", "VelocityField", "advance_flow", "cross_validate", "decreasing_rearrangement", "dini_seminorm",
    "distribution_function", "flow_gradient_bounds", "lorentz_norm", "modulus_of_continuity", "mollify",
    "near_far_split", "norm_report", "read_snapshot", "sample", "simulate", "small_set_concentration",
    "sobolev_norm", "tail_mass", "translation_modulus", "transport_by_characteristics", "velocity_direct",
    "velocity_gradient", "velocity_spectral", "write_snapshot",
]
