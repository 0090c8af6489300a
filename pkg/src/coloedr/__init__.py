"""Supply-function bidding for emergency demand response in multi-tenant data centers."""
from .cost_models import (AnticipationContext, ConfigError, CostFunction, NullCost, PiecewiseLinearCost, QuadraticCost,
                          QueueingCost, QueueingCostParams, SampledCost, WorstCaseSpec, cost_from_record,
                          make_worst_case_instance)
from .mandatory_market import (MandatoryOutcome, MandatoryScenario, solve_diesel_only, solve_mandatory,
                               solve_price_anticipating, solve_price_taking, solve_social_optimum)
from .unbounded import UNBOUNDED, is_unbounded
from .voluntary_market import VoluntaryOutcome, VoluntaryScenario, solve_vdr

__version__ = "0.1.0"
