from .bounds import (BoundEntry, BoundReport, ModifiedCostReport, check_bounds_mandatory, check_bounds_voluntary,
                     check_modified_cost_bounds)
from .kkt import kkt_residuals
from .oracles import (Cluster, EquilibriumSearch, NashCertificate, NashEntry, best_response_scan,
                      exhaustive_equilibrium_search, nash_certificate)
from .scenarios import random_cost, random_mandatory_scenario, random_voluntary_scenario
from .sweep import SweepResult, run_bound_sweep
