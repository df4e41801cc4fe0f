import phbound.bcspec.builtin as _builtin  # noqa: F401
from phbound.bcspec.classify import (
    Membership,
    check_dimensions,
    classify,
    constraint_residual,
    domain_membership,
    m_to_w,
    pos_def_w_matrix,
    structural_checks,
    w_to_m,
)
from phbound.bcspec.factory import ContractionFactory
from phbound.bcspec.types import (
    BoundaryCondition,
    BoundaryMap,
    KernelW,
    LinearM,
    NonlinearG,
    describe,
    is_linear,
)

__all__ = [
    "BoundaryCondition",
    "BoundaryMap",
    "ContractionFactory",
    "KernelW",
    "LinearM",
    "Membership",
    "NonlinearG",
    "check_dimensions",
    "classify",
    "constraint_residual",
    "describe",
    "domain_membership",
    "is_linear",
    "m_to_w",
    "pos_def_w_matrix",
    "structural_checks",
    "w_to_m",
]
