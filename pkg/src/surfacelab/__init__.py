"""Surface-code fault-tolerance lab.

Toric and planar codes, phenomenological and circuit-level noise, exact
matching decoders, analytic threshold bounds and a 4D local-rule model.
"""

from .bounds import (
    css_capacity,
    css_capacity_root,
    enumerate_saps,
    gate_level_condition,
    growth_constant,
    local4d_threshold_bound,
    storage_threshold_bounds,
)
from .code import (
    LogicalAction,
    PauliErrorState,
    SurfaceCode,
    build_planar_code,
    build_toric_code,
    logical_effect,
    syndrome_of,
)
from .decoder import (
    DecoderConfig,
    WindowState,
    decode_2d,
    decode_3d,
    decode_ml,
    readout_logical,
    window_flush,
    window_step,
)
from .harness import ExperimentConfig, estimate_failure_rate, find_threshold, run_trial
from .homology import Chain, HomologyClass, Lattice, boundary, build_lattice, homology_class
from .local4d import build_4d_toric, heat_bath_round, local_update_round, relaxation_experiment
from .matching import Matching, MatchingProblem, brute_force_matching, min_weight_perfect_matching
from .noise import (
    EffectiveRates,
    GateRates,
    derive_circuit_rates,
    sample_circuit_level,
    sample_phenomenological,
    trial_rng,
)
from .syndrome import extract_monopoles, measure_history

__version__ = "0.1.0"
