"""End-to-end pipeline glue shared by integration and acceptance tests."""

from __future__ import annotations

from diarkit import (
    Annotation,
    EvalOptions,
    KMeansParams,
    NaiveOnlineClusterer,
    SpectralParams,
    SynthScenario,
    aggregate,
    annotation_from_clusters,
    der,
    estimate_k_elbow,
    generate,
    kmeans,
    run_online,
    segmentize,
    spectral_cluster,
)

# Dev-tuned spectral settings for the synthetic corpus: the affinities are
# already clean, so the pre-threshold smoothing is disabled; everything
# else stays at its default.
TUNED_SPECTRAL = {"sigma": 0.0, "p_percentile": 95.0}


def prepare(scenario: SynthScenario):
    """Scenario -> (reference annotation, segment embeddings)."""
    reference, windows, regions = generate(scenario)
    return reference, aggregate(windows, segmentize(regions))


def labels_spectral(embeddings, **overrides):
    params = SpectralParams(seed=0, **{**TUNED_SPECTRAL, **overrides})
    result = spectral_cluster(embeddings, params)
    return result.clustering.labels, result.k


def labels_kmeans_elbow(embeddings, seed: int = 0):
    params = KMeansParams(seed=seed)
    k = estimate_k_elbow(embeddings, min(8, len(embeddings)), params, min_clusters=2)
    return kmeans(embeddings, KMeansParams(k=k, seed=seed)).labels, k


def labels_naive(embeddings, threshold: float = 0.5):
    result = run_online(NaiveOnlineClusterer(threshold=threshold), embeddings)
    return result.labels, result.k


def hypothesis_from(reference: Annotation, embeddings, labels) -> Annotation:
    return annotation_from_clusters(
        reference.recording_id, [e.interval for e in embeddings], labels
    )


def score_total(reference, embeddings, labels, collar: float = 0.0):
    report = der(
        reference, hypothesis_from(reference, embeddings, labels), EvalOptions(collar=collar)
    )
    return report
