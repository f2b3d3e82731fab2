"""Binary-state mean field game with private fields: equilibria, phase diagram, N-player checks."""

__version__ = "0.1.0"

from .core import (ModelParams, conditional_mean, consistency_F, optimal_rate, population_mean,
                   value_function, z_gap)
from .equilibrium import (CLASS_ORDER, REGIONS, Equilibrium, EquilibriumClass, PhaseSignature,
                          brute_force_roots, classify, find_equilibria, phase_grid, region_signature)
from .curves import (big_G, critical_curves, eps_star1, eps_star2, eps_star3, t_c_polarized,
                     t_c_unpolarized, t_star, v_s)
from .selection import (CostBreakdown, SelectionResult, branch_crossing_times, cost_breakdown,
                        initial_value, min_total_cost_equilibrium, predict_selected)
from .hjb import (ControlTable, HjbConfig, RateConvention, ValueTable, full_hjb_oracle, solve_hjb,
                  state_count, terminal_condition)
from .sim import SimConfig, SimSummary, Trajectory, monte_carlo, sample_initial, simulate_path
