"""Delay differential equation toolkit: method-of-steps integration,
characteristic-root analysis, stability and oscillation criteria, and a zoo
of population models."""

from .chaintrick import (LotkaVolterraDistributed, auxiliary_initial_values, lv_steady_state,
                         reduce_exponential_kernel, reduced_history)
from .core import (Certainty, DelaySystem, HistoryFunction, KernelTerm, Tag, Trajectory,
                   Verdict)
from .criteria import (DiscreteMeasure, competition_delay_independent_test,
                       cooperative_absolute_test, hutchinson_global_test, lyapunov_lv_monitor,
                       oscillation_test_linear, stepan_discrete, stepan_distributed)
from .errors import ConfigurationError, DelayLabError, NumericFailure
from .spectral import (QuasiPolynomial, RootWindow, charfun_eval, hopf_point_scalar,
                       linearize_at, rightmost_root, roots_in_rectangle, routh_hurwitz_2,
                       stability_switch_scan)
from .stepper import IntegratorOptions, classify_oscillation_empirical, integrate
from .zoo import ModelSpec, allee_transform, make_model, nondimensionalize_hutchinson

__version__ = "0.1.0"
