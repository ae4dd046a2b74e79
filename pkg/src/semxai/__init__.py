"""Semantic explanations for a small convolutional network: common traits,
semantic spaces, semantic probabilities and trustworthiness assessment."""

from .assessment import Explanation, Indicators, assess, compute_radar, derive_indicators, generate_explanation
from .corpus import Corpus, CorpusSpec, generate_synthetic_corpus, load_folder_corpus
from .errors import *  # noqa: F401,F403
from .evolution import EvolutionResult, GaConfig, evolve, fitness
from .nn import CnnModel, TrainConfig, build_model, desk_architecture, forward_features, load_checkpoint, \
    objective_gradient, predict, save_checkpoint, train
from .semspace import SemanticSpace, TargetEncoding, VisConfig, build_target_encoding, discover_ssns, \
    extract_semantic_space, visualize
from .semstats import AttackConfig, FittedActivation, Radar, fit_activation_distribution, flag_adversarial, \
    pgd_attack, qq_r2, search_samples, semantic_probability, weighted_activation
from .superpixel import MaskSpec, Segmentation, mask_segments, rgb_to_lab, slic_segment
from .regularizers import tv_regularizer
from .traits import PcaResult, extract_common_traits, row_centered_pca, spread

__version__ = "0.1.0"
