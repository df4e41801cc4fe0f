import math
from typing import Any

import numpy as np

from phbound import matnum
from phbound.bcspec.factory import ContractionFactory
from phbound.exceptions import DimensionMismatchError
from phbound.typing import Vector


def _vector(value: Any, size: int, what: str) -> Vector:
    try:
        return np.broadcast_to(np.asarray(value, dtype=np.float64), (size,)).copy()
    except ValueError as ex:
        raise DimensionMismatchError(what, size, np.shape(value)) from ex


@ContractionFactory.register("linear")
class LinearMap:
    def __init__(self, size: int, matrix: Any) -> None:
        self.matrix = matnum.as_matrix(matrix, "matrix")
        if self.matrix.shape != (size, size):
            raise DimensionMismatchError("matrix", (size, size), self.matrix.shape)

    def __call__(self, x: Vector) -> Vector:
        return self.matrix @ x

    @staticmethod
    def name() -> str:
        return "linear"

    def params(self) -> dict[str, Any]:
        return {"matrix": self.matrix.tolist()}


@ContractionFactory.register("clamp")
class Clamp:
    """Componentwise saturation, 1-Lipschitz whenever lower <= 0 <= upper."""

    def __init__(self, size: int, lower: float = -1.0, upper: float = 1.0) -> None:
        if lower > upper:
            raise ValueError(f"Empty clamp range [{lower}, {upper}]")
        self.size = size
        self.lower = float(lower)
        self.upper = float(upper)

    def __call__(self, x: Vector) -> Vector:
        return np.clip(x, self.lower, self.upper)

    @staticmethod
    def name() -> str:
        return "clamp"

    def params(self) -> dict[str, Any]:
        return {"lower": self.lower, "upper": self.upper}


@ContractionFactory.register("scaled_rotation")
class ScaledRotation:
    """``scale`` times a rotation by ``angle`` in each consecutive coordinate plane.

    With an odd size the last coordinate is only scaled.
    """

    def __init__(self, size: int, scale: float = 1.0, angle: float = 0.0) -> None:
        self.scale = float(scale)
        self.angle = float(angle)
        c, s = math.cos(angle), math.sin(angle)
        rot = np.eye(size)
        for p in range(0, size - 1, 2):
            rot[p : p + 2, p : p + 2] = [[c, -s], [s, c]]
        self.matrix = self.scale * rot

    def __call__(self, x: Vector) -> Vector:
        return self.matrix @ x

    @staticmethod
    def name() -> str:
        return "scaled_rotation"

    def params(self) -> dict[str, Any]:
        return {"scale": self.scale, "angle": self.angle}


@ContractionFactory.register("shifted")
class Shifted:
    """``scale * x + shift``; a contraction that does not fix the origin."""

    def __init__(self, size: int, shift: Any = 1.0, scale: float = 0.5) -> None:
        self.shift = _vector(shift, size, "shift")
        self.scale = float(scale)

    def __call__(self, x: Vector) -> Vector:
        return self.scale * x + self.shift

    @staticmethod
    def name() -> str:
        return "shifted"

    def params(self) -> dict[str, Any]:
        return {"shift": self.shift.tolist(), "scale": self.scale}
