"""Nash equilibria of an aggregative coordination game under expected-utility and
prospect-theoretic preferences."""

from .dynamics import (Constant, CoordinatorConfig, Diminishing, GradientPlayConfig,
                       coordinator_ascent, coordinator_utility, gradient_play, multi_start,
                       select_equilibrium)
from .errors import DomainError, InconsistentPriceError, ScenarioError
from .eut import (eut_price_A, eut_price_B, eut_residual, fair_selection, jain_index,
                  price_consistency, sample_equilibria)
from .game import (Scenario, case1, eut_partial, eut_utility, individual_cost, make_scenario,
                   outcome, potential, uniform_price, usage_benefit)
from .prospect import (Prospect, ValueFunction, WeightingFunction, decision_weights,
                       prospect_value, pt_partial, pt_utility, tilted_distribution)
from .pt import (asymmetry_set, best_response_oracle, exp_tilt_mean, fixed_point_map,
                 linear_derivative_singleton_check, pt_report, scaled_partial,
                 symmetric_exponential_solve, vanishing_check)
from .scenario_io import dumps_scenario, loads_scenario, parse_scenario

__version__ = "0.1.0"
