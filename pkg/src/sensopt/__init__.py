"""Optimal power, rate and distortion allocation for an energy-limited sensor node."""

from .model import (Battery, Harvest, Policy, Scenario, cap_from_power, distortion_from_rate,
                    power_from_cap, slot_energy, total_distortion)
from .constraints import (ConstraintSystem, LinIneq, build_raw_system, build_reduced_system,
                          fm_eliminate, format_system, parse_system, project_raw_system,
                          systems_equivalent)
from .solver import (SolveReport, SolverConfig, solve, solve_battery, solve_harvest,
                     solve_processing, solve_sampling)
from .waterfilling import (SlotGeometry, processing_policy_d1, proc_root_vp, samp_root_vs,
                           waterfill_battery_d1, waterfill_harvest_d1)
from .analysis import WaterProfile, check_structure, extract_profile

__version__ = "0.1.0"
