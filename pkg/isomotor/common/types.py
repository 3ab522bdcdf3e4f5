"""Custom types for the isomotor package"""

from typing import Literal, Tuple, Union

import numpy as np
import numpy.typing as npt

Numeric = Union[int, float]

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

Point2D = Tuple[float, float]

# Literal types to avoid circular imports
Side = Literal["rotor", "stator"]
EdgeName = Literal["south", "north", "west", "east"]
BoundaryTag = Literal["dirichlet", "antiperiodic", "airgap"]
MaterialName = Literal["air", "iron", "magnet", "copper"]
OptimizationMode = Literal["param", "shape", "sequential", "combined"]
