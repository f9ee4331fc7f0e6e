"""Association rule mining with an autoencoder, plus FP-Growth and NSGA-II baselines."""

from .autoencoder import AEModel, TrainConfig, init_model, train_until_plateau
from .dataset import (
    BinaryMatrix,
    SyntheticSpec,
    generate_synthetic,
    load_binary_csv,
    load_categorical_csv,
    load_dataset,
    load_transactions,
    write_binary_csv,
)
from .fpgrowth import fpgrowth_rules
from .miner import ArmAeConfig, compute_similarity, full_pipeline, mine
from .nsgaii import NsgaConfig, evolve
from .rules import (
    Rule,
    RuleSet,
    ScoredRule,
    brute_force_mine,
    coverage,
    itemset_support,
    score_rule,
    score_rules,
    summarize,
)

__version__ = "0.1.0"
