from typing import TypeAlias

import numpy as np
import numpy.typing as npt

Vector: TypeAlias = npt.NDArray[np.float64]

Matrix: TypeAlias = npt.NDArray[np.float64]

Interval: TypeAlias = tuple[float, float]
