"""Speaker diarization downstream of a neural embedder.

Takes window-level speaker embeddings, aggregates them into segment
embeddings, clusters the segments (spectral with a refined affinity
matrix, spherical k-means with an elbow criterion, or a naive online
clusterer), and scores hypotheses against references with DER.
"""

from .aggregation import (
    SpeechRegion,
    WindowEmbedding,
    aggregate,
    regions_from_windows,
    segmentize,
)
from .clustering import (
    DEFAULT_MAX_CLUSTERS,
    KMeansParams,
    NaiveOnlineClusterer,
    OnlineClusterer,
    SpectralParams,
    SpectralResult,
    build_affinity,
    estimate_k_eigengap,
    estimate_k_elbow,
    kmeans,
    mscd_table,
    refine_chain,
    refine_diffuse,
    refine_row_max_normalize,
    refine_symmetrize,
    refine_threshold,
    run_online,
    spectral_cluster,
    spectral_embed,
)
from .core import (
    AffinityMatrix,
    Annotation,
    ClusteringResult,
    DegenerateAffinityError,
    InvalidInputError,
    NumericError,
    ParseError,
    Segment,
    SegmentEmbedding,
    TimeInterval,
    annotation_from_clusters,
)
from .io import (
    parse_rttm,
    parse_uem,
    pgm_bytes,
    read_embeddings_csv,
    read_regions_csv,
    write_embeddings_csv,
    write_pgm_heatmap,
    write_regions_csv,
    write_rttm,
)
from .metrics import (
    DerReport,
    EvalOptions,
    combine_reports,
    der,
    map_speakers,
    scoring_region,
)
from .numerics import (
    EigenDecomposition,
    cosine_distance,
    cosine_similarity,
    eigh,
    gaussian_blur,
    l2_normalize,
    nearest_rank_percentile,
    optimal_assignment,
)
from .synth import (
    SpeakerStats,
    SynthScenario,
    angular_stats,
    generate,
    speaker_directions,
)

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix",
    "Annotation",
    "ClusteringResult",
    "DEFAULT_MAX_CLUSTERS",
    "DegenerateAffinityError",
    "DerReport",
    "EigenDecomposition",
    "EvalOptions",
    "InvalidInputError",
    "KMeansParams",
    "NaiveOnlineClusterer",
    "NumericError",
    "OnlineClusterer",
    "ParseError",
    "Segment",
    "SegmentEmbedding",
    "SpeakerStats",
    "SpectralParams",
    "SpectralResult",
    "SpeechRegion",
    "SynthScenario",
    "TimeInterval",
    "WindowEmbedding",
    "aggregate",
    "angular_stats",
    "annotation_from_clusters",
    "build_affinity",
    "combine_reports",
    "cosine_distance",
    "cosine_similarity",
    "der",
    "eigh",
    "estimate_k_eigengap",
    "estimate_k_elbow",
    "gaussian_blur",
    "generate",
    "kmeans",
    "l2_normalize",
    "map_speakers",
    "mscd_table",
    "nearest_rank_percentile",
    "optimal_assignment",
    "parse_rttm",
    "parse_uem",
    "pgm_bytes",
    "read_embeddings_csv",
    "read_regions_csv",
    "refine_chain",
    "refine_diffuse",
    "refine_row_max_normalize",
    "refine_symmetrize",
    "refine_threshold",
    "regions_from_windows",
    "run_online",
    "scoring_region",
    "segmentize",
    "speaker_directions",
    "spectral_cluster",
    "spectral_embed",
    "write_embeddings_csv",
    "write_pgm_heatmap",
    "write_regions_csv",
    "write_rttm",
]
