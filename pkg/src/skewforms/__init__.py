"""skewforms: symbolic skew-symmetric differential forms and their relations.

Core surface:

* :mod:`skewforms.expr` - exact scalar expressions (parse via
  :func:`skewforms.parsing.parse_expression`).
* :mod:`skewforms.forms` - charts, forms, wedge, exterior derivative,
  commutators, pseudostructures, pullback.
* :mod:`skewforms.connection` - connection coefficients, torsion, curvature.
* :mod:`skewforms.relations` - identity analysis of d(psi) = omega,
  integrating factors, restriction, sequential integration.
* :mod:`skewforms.characteristics` - strips of first-order problems, RK4,
  caustic detection.
* :mod:`skewforms.cases` - the bundled case studies.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .expr import (
    Expr,
    ExprError,
    differentiate,
    evaluate,
    expand,
    is_identically_zero,
    normalize,
    subst,
    sym,
    to_text,
    together,
)
from .forms import (
    Chart,
    CommutatorReport,
    Form,
    FormError,
    Pseudostructure,
    commutator,
    exactness_witness_check,
    exterior_derivative,
    form_to_literal,
    is_closed,
    parse_form,
    pullback,
    wedge,
)
from .connection import (
    ClassifyReport,
    Connection,
    christoffel_from_metric,
    classify,
    covariant_derivative_covector,
    curvature,
    torsion,
)
from .parsing import ParseError, parse_expression
from .relations import (
    EvolutionaryRelation,
    FactorSearch,
    IdenticalRestriction,
    IdentityVerdict,
    NotClosedOnPseudostructure,
    analyze,
    degenerate_conditions,
    find_integrating_factor,
    recover_potential,
    restrict,
    sequential_integrate,
)
from .characteristics import (
    FirstOrderPDE,
    HamiltonJacobiProblem,
    Trajectory,
    canonical_system,
    characteristic_system,
    closure_along,
    detect_degeneracy,
    integrate,
)
from .verdict import DEFAULT_POLICY, Policy, Verdict

__version__ = "0.1.0"
