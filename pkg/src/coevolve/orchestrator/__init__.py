from .config import ConfigError, LoopConfig, SolverSettings, SynthesisConfig, ToyTrainConfig, load_config, parse_config
from .evolve import build_seed_dataset, evolve_dataset, seed_record
from .loop import IterationManifest, LoopError, Workdir, complete_external, run_iteration, run_loop
from .schedule import IterationPlan, PlanError, SchedulePlan, TrainJobSpec
from .stats import stats, stats_file

__all__ = [
    "ConfigError",
    "IterationManifest",
    "IterationPlan",
    "LoopConfig",
    "LoopError",
    "PlanError",
    "SchedulePlan",
    "SolverSettings",
    "SynthesisConfig",
    "ToyTrainConfig",
    "TrainJobSpec",
    "Workdir",
    "build_seed_dataset",
    "complete_external",
    "evolve_dataset",
    "load_config",
    "parse_config",
    "run_iteration",
    "run_loop",
    "seed_record",
    "stats",
    "stats_file",
]
