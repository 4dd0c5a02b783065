"""Gender-ambiguous speaker embedding generation and objective evaluation."""

from .density import DensityField, GenderDensity, KdeConfig, Metric, ambiguity, build_field, kde_at
from .evaluate import FisherBoundary, ambiguity_report, consistency_matrix, pairwise_distance_distribution
from .generator import AmbiguousVoiceGenerator, generate_suite
from .io import (
    DVectorRecord,
    EmbeddingSet,
    Gender,
    GeneratedVoice,
    Method,
    SpeakerRecord,
    load_dvectors,
    load_embeddings,
    load_generated,
    save_generated,
)
from .pca import PcaModel, fit_pca
from .ridge import RidgePath, extract_ridge, sample_equidistant
from .stats import correlation_ratio, correlation_ratio_profile
from .synth import SynthSpec, synth_dvectors, synth_embeddings

__version__ = "0.1.0"

__all__ = [
    "AmbiguousVoiceGenerator",
    "DVectorRecord",
    "DensityField",
    "EmbeddingSet",
    "FisherBoundary",
    "Gender",
    "GenderDensity",
    "GeneratedVoice",
    "KdeConfig",
    "Method",
    "Metric",
    "PcaModel",
    "RidgePath",
    "SpeakerRecord",
    "SynthSpec",
    "ambiguity",
    "ambiguity_report",
    "build_field",
    "consistency_matrix",
    "correlation_ratio",
    "correlation_ratio_profile",
    "extract_ridge",
    "fit_pca",
    "generate_suite",
    "kde_at",
    "load_dvectors",
    "load_embeddings",
    "load_generated",
    "pairwise_distance_distribution",
    "sample_equidistant",
    "save_generated",
    "synth_dvectors",
    "synth_embeddings",
]
