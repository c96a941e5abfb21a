"""Time-dependent harmonic oscillators in noncommutative phase space.

Submodules: ``specfun`` (Laguerre polynomials, Gauss rules), ``expr``
(time expressions with exact derivatives), ``scenario`` (frameworks and
NC parameter maps), ``ermakov`` (auxiliary-equation families), ``phases``
(Lewis and Berry phases), ``observables`` (matrix elements, energies,
uncertainties) and ``report`` (figures, scenario runs, verification).
"""
from . import errors, expr, tolerances
from .ermakov import (EpSolution, chiellini_check, ep_elementary, ep_exponential,
                      ep_rational, ep_residual, integrate_ep)
from .errors import *  # noqa: F401,F403
from .observables import (StateParams, energy_expectation, energy_profile,
                          matrix_element_xk, matrix_element_yk,
                          uncertainty_commutative, uncertainty_noncommutative)
from .phases import (berry_phase, lewis_phase_closed, lewis_phase_quadrature)
from .scenario import (HamiltonianCoefficients, QuantumNumbers, Scenario,
                       load_scenario, physical_window)
from .specfun import (LaguerreSpec, gauss_laguerre, laguerre,
                      laguerre_weighted_integral)

__version__ = "0.1.0"
