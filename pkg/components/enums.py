from enum import Enum


class InitKind(str, Enum):

    GAUSSIAN = "gaussian"
    PERTURBED_GAUSSIAN = "perturbed_gaussian"
    VORTEX_SEEDED = "vortex_seeded"
    FROM_FILE = "from_file"


class Region(str, Enum):
    """Where ‖u‖_Σ̇² sits relative to the ν-ball and μ-ball of radius r."""

    INSIDE_NU_BALL = "inside_nu_ball"
    ANNULUS = "annulus"
    BOUNDARY = "boundary"


class BallNorm(str, Enum):

    SIGMA_DOT = "sigma_dot"
    OMEGA1 = "omega1"


class RunStatus(str, Enum):

    COMPLETED = "completed"
    FAILED = "failed"


class BlowupReason(str, Enum):

    GRADIENT = "gradient"
    TAIL_LEAK = "tail_leak"
    NON_FINITE = "non_finite"


class StreamPurpose(str, Enum):
    """Named random streams, one per consumer of randomness."""

    INIT = "init"
    PERTURBATION = "perturbation"
    TRIALS = "trials"
    CHECK = "check"
