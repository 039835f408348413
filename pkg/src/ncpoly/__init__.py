"""Quantum polymorphisms, POVM dilations and operator-kernel Radon-Nikodym derivatives on finite spaces."""

from .classical import FiniteMeasure, JointMeasure, conditional, disintegration_check, marginals
from .dilation import NaimarkDilation, dilate, split_product
from .errors import (
    AxiomViolation,
    DimensionError,
    DomainError,
    InternalConsistencyError,
    NcpolyError,
    NotPSDError,
    OrderingViolationError,
    TheoremViolationError,
)
from .linalg import DEFAULT_TOL, Tolerance
from .opkernels import OperatorKernel, factor, is_pd, leq, povm_kernel, rn_derivative
from .povm import Povm, Pvm, covariance_operator, evaluate, marginal_povm, validate_povm, validate_pvm
from .qpoly import disintegrate, disintegrate_left, make_qpoly, tensor_povm, tensor_rn_check
from .spaces import Event, FiniteSpace, ProductSpace, preimage, product
from .states import DensityOperator, ScalarKernel, classical_embed, in_poly, link_kernels, partial_traces, slice_kernel

__version__ = "0.1.0"

__all__ = [
    "FiniteMeasure",
    "JointMeasure",
    "conditional",
    "disintegration_check",
    "marginals",
    "NaimarkDilation",
    "dilate",
    "split_product",
    "AxiomViolation",
    "DimensionError",
    "DomainError",
    "InternalConsistencyError",
    "NcpolyError",
    "NotPSDError",
    "OrderingViolationError",
    "TheoremViolationError",
    "DEFAULT_TOL",
    "Tolerance",
    "OperatorKernel",
    "factor",
    "is_pd",
    "leq",
    "povm_kernel",
    "rn_derivative",
    "Povm",
    "Pvm",
    "covariance_operator",
    "evaluate",
    "marginal_povm",
    "validate_povm",
    "validate_pvm",
    "disintegrate",
    "disintegrate_left",
    "make_qpoly",
    "tensor_povm",
    "tensor_rn_check",
    "Event",
    "FiniteSpace",
    "ProductSpace",
    "preimage",
    "product",
    "DensityOperator",
    "ScalarKernel",
    "classical_embed",
    "in_poly",
    "link_kernels",
    "partial_traces",
    "slice_kernel",
]
