from pathlib import Path


class PhboundError(Exception):
    pass


class NotSymmetricError(PhboundError):
    def __init__(self, asymmetry: float, tolerance: float) -> None:
        super().__init__(
            f"Matrix is not symmetric: asymmetry {asymmetry:.3e} exceeds "
            f"tolerance {tolerance:.3e}"
        )


class NoConvergenceError(PhboundError):
    def __init__(self, sweeps: int) -> None:
        super().__init__(f"Jacobi iteration did not converge after {sweeps} sweeps")


class SingularMatrixError(PhboundError):
    def __init__(self, pivot: float, tolerance: float) -> None:
        super().__init__(
            f"Matrix is singular: pivot {pivot:.3e} is below {tolerance:.3e}"
        )
        self.pivot = pivot
        self.tolerance = tolerance


class SingularSystemError(SingularMatrixError):
    def __init__(self, pivot: float, tolerance: float) -> None:
        PhboundError.__init__(
            self,
            f"Discrete resolvent system is singular: pivot {pivot:.3e} "
            f"is below {tolerance:.3e}",
        )
        self.pivot = pivot
        self.tolerance = tolerance


class DimensionMismatchError(PhboundError):
    def __init__(self, what: str, expected: object, actual: object) -> None:
        super().__init__(f"Wrong shape for {what}: expected {expected}, got {actual}")


class InvalidSystemError(PhboundError):
    pass


class SingularQError(PhboundError):
    def __init__(self, eigenvalue: float) -> None:
        super().__init__(
            f"Boundary form is numerically singular (eigenvalue {eigenvalue:.3e})"
        )


class DegenerateError(PhboundError):
    def __init__(self) -> None:
        super().__init__(
            "Boundary block [[Q+, Q-], [Q-, Q+]] failed the pivot check; "
            "the eigendecomposition of Q is unreliable"
        )


class OutOfIntervalError(PhboundError):
    def __init__(self, t: float, interval: tuple[float, float]) -> None:
        super().__init__(f"Point {t} lies outside of [{interval[0]}, {interval[1]}]")


class UnsupportedHamiltonianError(PhboundError):
    def __init__(self, reason: str) -> None:
        super().__init__(f"Unsupported Hamiltonian density: {reason}")


class RankDeficientError(PhboundError):
    def __init__(self, rank: int, expected: int) -> None:
        super().__init__(f"Kernel matrix W has rank {rank}, expected {expected}")


class KSingularError(PhboundError):
    def __init__(self) -> None:
        super().__init__(
            "Factor K is singular: W is not of the form K(Q- - MQ+, Q+ - MQ-)"
        )


class NotConvergedError(PhboundError):
    def __init__(self, what: str, iterations: int, residual: float) -> None:
        super().__init__(
            f"{what} did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )
        self.iterations = iterations
        self.residual = residual


class GridTooCoarseError(PhboundError):
    def __init__(self, nodes: int, minimum: int) -> None:
        super().__init__(f"Grid with {nodes} nodes is too coarse (minimum {minimum})")


class ConstructionFailedError(PhboundError):
    def __init__(self, probe: float, reason: str) -> None:
        super().__init__(
            f"Unable to construct a domain element for c={probe}: {reason}"
        )


class MismatchedTrajectoriesError(PhboundError):
    def __init__(self, reason: str) -> None:
        super().__init__(f"Trajectories cannot be compared: {reason}")


class InvalidSamplesError(PhboundError):
    def __init__(self, i: int, j: int, ratio: float, lip: float) -> None:
        super().__init__(
            f"Samples {i} and {j} violate the Lipschitz bound: "
            f"ratio {ratio:.6g} > {lip:.6g}"
        )


class UnknownContractionError(PhboundError):
    def __init__(self, name: str, known: list[str]) -> None:
        super().__init__(
            f"Unknown built-in boundary map '{name}' (known: {', '.join(known)})"
        )


class SystemFileError(PhboundError):
    def __init__(self, file: Path | str, path: str, message: str) -> None:
        super().__init__(f"{file}: {message} at {path}")
        self.file = file
        self.path = path
