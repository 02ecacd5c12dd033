"""Eventual cone invariance of matrix semigroups ``t -> e^{tA}``.

Modules
-------
linalg    eigenstructure, exponentials, resolvents, spectral projections
cones     cone specs, membership margins, duals, sampling, conic hulls
opspace   the operator cone L(X)_+ and functionals phi_{x,x'}
eventual  spectral classification and grid checkers
gallery   worked examples with verifiers
cli       the ``conegroup`` command
"""
__version__ = "0.1.0"

from .cones import (  # noqa: E402
    CapabilityError,
    ConeSpec,
    Membership,
    Operator,
    Polyhedral,
    Quadratic,
    Transformed,
    Verdict,
    conic_hull_member,
    dual,
    ice_cream,
    is_pointed,
    member,
    orthant,
    sample,
    witness_sequence_check,
)
from .eventual import (  # noqa: E402
    CheckReport,
    CheckVerdict,
    Notion,
    PerronData,
    PositivityCertificate,
    check,
    classify_eventual_positivity,
    dualize_check,
    perron_data,
)
from .linalg import expm, spectrum, spectral_bound  # noqa: E402
