"""Feature selection with one reinforcement-learning agent per feature."""

from .dataset import Dataset, FoldPartition, SplitSpec, load_csv, make_folds, make_synthetic, train_test_split
from .evaluation import RewardSpec, SubsetEvaluator
from .wrappers import GaParams, WrapperConfig, run_clean, run_ga, run_marl

__version__ = "0.1.0"
