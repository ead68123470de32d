"""Variational solver for semilinear Dirichlet problems on gasket prefractals."""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    BaryVertex,
    PrefractalGraph,
    ResourceLimitError,
    SimplexSpec,
    build_prefractal,
    embed_coordinates,
)
from .energy import (  # noqa: F401
    DiscreteForm,
    GraphMismatchError,
    VertexField,
    bilinear,
    build_form,
    dirichlet_laplacian,
    energy,
    harmonic_extension,
    integrate,
    measure_weights,
    norms,
    random_dirichlet,
)
from .problem import (  # noqa: F401
    AssumptionGrid,
    AssumptionReport,
    Bounds,
    Nonlinearity,
    ProblemInstance,
    ProblemValidationError,
    action,
    build_problem,
    check_assumptions,
    directional_derivative,
    gradient,
    growth_estimate,
)
from .solvers import (  # noqa: F401
    CriticalPointResult,
    DoubleResult,
    GeometryHypothesisError,
    GeometryReport,
    SolverOptions,
    brute_force_critical_points,
    double_critical_points,
    geometry_probe,
    minimize,
    minimize_in_ball,
    mountain_pass,
    palais_smale_diagnostic,
)
from .harness import (  # noqa: F401
    ConvergenceTable,
    HypothesisReport,
    PerturbationSchedule,
    ProblemSequence,
    build_sequence,
    hypothesis_check,
    run_convergence_experiment,
    uniform_convergence_estimate,
)
