"""Orthogonal dictionary learning by lp-norm maximization.

The brute-force checkers live in :mod:`lpdict.oracle`, which is not imported
here.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    EngineMismatchError,
    InvalidParamError,
    InvalidShapeError,
    LpDictError,
    NonFiniteError,
    NotOrthonormalError,
    ShapeMismatchError,
    TooLargeError,
    ZeroGradientError,
)
from .expectation import ExpectationEngine  # noqa: E402
from .metrics import AlignmentResult, align, sor, sphere_error, tau_i  # noqa: E402
from .objective import ObjectiveSpec, gamma_p, gradient, objective, population_max  # noqa: E402
from .solvers import (  # noqa: E402
    SolverConfig,
    SolverTrace,
    gpm_solve,
    population_gpm,
    population_gradient,
    rgd_solve,
    solve,
)
from .stiefel import PolarResult, StiefelPoint, orthonormality_defect, polar, random_stiefel  # noqa: E402
from .synth import (  # noqa: E402
    BernoulliGaussianSpec,
    DictionaryInstance,
    NoiseSpec,
    gen_instance,
    load_instance,
    save_instance,
    support_nonzero_count,
)
