"""Flat logarithmic connections for GL(n, C): Jordan-Chevalley data, monodromy,
Levelt normal forms and generalized monodromy data."""

from .errors import *  # noqa: F401,F403
from .matrix_core import (  # noqa: F401
    DEFAULT_TOL,
    NUMERIC_TOL,
    SpectralData,
    conjugacy_test,
    jordan_profile,
    mat_exp,
    nilpotent_log,
    spectral_decompose,
)
from .jordan import additive_jc, multiplicative_jc, real_imag_split  # noqa: F401
from .grading import (  # noqa: F401
    chi,
    grade,
    intertwiner_algebra,
    membership,
    parabolic_data,
    resonance_basis,
)
from .datum import MonodromyDatum  # noqa: F401
from .local import (  # noqa: F401
    GaugeSeries,
    PathSpec,
    PolyConnection,
    arrow,
    functor_L,
    linearizability,
    monodromy,
    monodromy_at,
    poincare_gauge,
    residue,
    semisimplify,
    transport,
    verify_cocycle,
)
from .classification import (  # noqa: F401
    datum_invariants,
    equivalent,
    functor_R,
    validate_datum,
)
from .fuchsian import (  # noqa: F401
    FuchsianSystem,
    assemble_global_datum,
    global_monodromy,
    loop_generators,
    residue_at_infinity,
)

__version__ = "0.1.0"
