from typing import Final

# Absolute floor under every norm-relative tolerance, so that zero
# matrices do not produce zero tolerances.
ABS_FLOOR: Final = 1e-13

SYMMETRY_RTOL: Final = 1e-12
PIVOT_RTOL: Final = 1e-13
RANK_RTOL: Final = 1e-10
Q_EIGEN_RTOL: Final = 1e-12

MAX_JACOBI_SWEEPS: Final = 100

# Verdict margins.
LIPSCHITZ_MARGIN: Final = 1e-8
NORM_MARGIN: Final = 1e-10
PSD_MARGIN: Final = 1e-10
MEMBERSHIP_RTOL: Final = 1e-9
RESOLVENT_MARGIN: Final = 1e-6
CONTRACTION_RTOL: Final = 1e-8

KIRSZBRAUN_TOL: Final = 1e-6
KIRSZBRAUN_MAX_ITER: Final = 100_000
KIRSZBRAUN_EPS: Final = 1e-12
KIRSZBRAUN_MAX_CUTS: Final = 500
KIRSZBRAUN_GAP_TOL: Final = 1e-10

FIXED_POINT_TOL: Final = 1e-10
FIXED_POINT_MAX_ITER: Final = 10_000

# Large resolvent parameter used to pull initial data onto the
# constraint manifold.
PROJECTION_MU: Final = 1e6

TAYLOR_DEGREE: Final = 30
MAX_ORACLE_LENGTH: Final = 4.0

ACCRETIVE_TOL_FACTOR: Final = 10.0
BALANCE_TOL_FACTOR: Final = 10.0
