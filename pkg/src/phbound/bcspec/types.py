from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, Protocol, TypeAlias

from phbound import matnum
from phbound.typing import Matrix, Vector

BoundaryMap: TypeAlias = Callable[[Vector], Vector]


class BuiltinMap(Protocol):
    """Named boundary map that can be described in a system file."""

    def __call__(self, x: Vector) -> Vector:
        pass

    @staticmethod
    def name() -> str:
        pass

    def params(self) -> dict[str, Any]:
        pass


@dataclass(frozen=True, eq=False)
class NonlinearG:
    """Boundary condition ``g(F1 u) = F2 u`` for a (claimed) contraction g."""

    g: BoundaryMap
    claimed_lip: float = 1.0
    label: str = "g"

    def as_map(self, qs: Any = None) -> BoundaryMap:
        return self.g


@dataclass(frozen=True, eq=False)
class LinearM:
    """Boundary condition ``M F1 u = F2 u``."""

    M: Matrix

    @classmethod
    def of(cls, matrix: Any) -> "LinearM":
        return cls(matnum.as_matrix(matrix, "M"))

    def as_map(self, qs: Any = None) -> BoundaryMap:
        return lambda x: self.M @ x


@dataclass(frozen=True, eq=False)
class KernelW:
    """Boundary condition ``W (tr_b H u, tr_a H u) = 0``."""

    W: Matrix

    @classmethod
    def of(cls, matrix: Any) -> "KernelW":
        return cls(matnum.as_matrix(matrix, "W"))

    def as_map(self, qs: Any) -> BoundaryMap:
        from phbound.bcspec.classify import w_to_m

        m, _ = w_to_m(qs, self.W)
        return lambda x: m @ x


BoundaryCondition: TypeAlias = NonlinearG | LinearM | KernelW


def is_linear(bc: BoundaryCondition) -> bool:
    return isinstance(bc, LinearM | KernelW)


def describe(bc: BoundaryCondition) -> str:
    match bc:
        case NonlinearG(label=label):
            return f"nonlinear g ({label})"
        case LinearM(M=m):
            return f"linear M {m.shape[0]}x{m.shape[1]}"
        case KernelW(W=w):
            return f"kernel W {w.shape[0]}x{w.shape[1]}"
    raise TypeError(f"Unknown boundary condition {bc!r}")
