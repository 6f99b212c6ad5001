"""Desk-scale lab for attention-aware generative semantic communication:
sender-side semantic extraction and packing, an OFDMA downlink model, a
perceptual utility, and a diffusion-policy bandwidth allocator."""

from .bundle import (AttentionMap, BinaryAttentionMap, BundleError, RawScoreEntry,
                     RawScoreStack, SemComBundle, WordAnnotation, aggregate_attention,
                     bicubic_resize, binarize, load_bundle, save_bundle)
from .channel import ChannelConfig, UserLink, capacity, channel_gain, sample_rayleigh, token_budget
from .metrics import (JpsqParams, ProxyScorer, QualityDistribution, ScoreTable,
                      calibrate_tmax, cosine_distance, jpsq, nima_moments,
                      normalize_similarity, user_utility)
from .packing import SemanticInfo, TransmittedPrefix, pack, reduction_ratio, truncate
from .prompt_analysis import (DependencyLevelMatrix, DependencyMatrix, ImportanceVector,
                              build_dependency_matrices, build_level_matrix, filter_words,
                              importance, miou)
from .segmentation import AttentionCluster, CleanSegment, clean_segment, dbscan

__version__ = "0.1.0"
