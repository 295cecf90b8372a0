"""Contextual-bandit toolkit: aspiration-level (satisficing) policies with
neural and linear function approximation, four reliability estimators,
standard baselines, and a seeded simulation harness."""

from .core import (OraclePolicy, Policy, RandomPolicy, RegretTrace, RSPolicy,
                   StepOutcome, regret_update, rs_value, subjective_regret)
from .envs import (ArtificialConfig, BanditDataset, IngestionError,
                   dataset_to_csv, env_step, generate_artificial, load_shuttle,
                   make_shuttle_like_file)
from .harness import (AggregatedResult, AllRunsFailed, ConfigError,
                      ExperimentConfig, build_dataset, make_policy, run_batch,
                      run_simulation, write_results)
from .linear import (EpisodicMemory, LinGreedy, LinTS, LinUCB, LinearStats,
                     RegLinRS, knn_reliability)
from .neural import NeuralRS, NeuralTS, NeuralUCB, ReplayBuffer
from .numeric import (AdamState, MlpParams, TrainingDiverged, gradient_check,
                      mlp_forward, mlp_init, mlp_train_step, softmax,
                      solve_linear_system)
from .reliability import (CentroidBank, centroid_commit, centroid_distances,
                          centroid_weights, kmeans_rho, trial_ratio_reliability,
                          xe_reliability)

__version__ = "0.1.0"
