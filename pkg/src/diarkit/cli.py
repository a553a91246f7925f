"""Command-line surface: synth, diarize, evaluate, sweep.

Exit codes: 0 success, 1 degenerate input (zero vectors, empty segments,
unnormalizable affinities, infeasible scenario geometry), 2 usage, flag,
or file-format errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as formats
from .aggregation import aggregate, regions_from_windows, segmentize
from .clustering import (
    KMeansParams,
    NaiveOnlineClusterer,
    SpectralParams,
    estimate_k_elbow,
    kmeans,
    run_online,
    spectral_cluster,
)
from .core import (
    Annotation,
    InvalidInputError,
    NumericError,
    ParseError,
    annotation_from_clusters,
)
from .metrics import DerReport, EvalOptions, combine_reports, der
from .synth import SCENARIO_KINDS, SynthScenario, generate

STAGE_NAMES = ("blur", "threshold", "symmetrize", "diffuse", "rownorm")


class UsageError(Exception):
    """A flag combination or value that fails validation before any work."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise UsageError(message)


def _segment_embeddings(embeddings_path: str, regions_path: str | None, max_len: float):
    windows = formats.read_embeddings_csv(Path(embeddings_path).read_text())
    if regions_path:
        regions = formats.read_regions_csv(Path(regions_path).read_text())
    else:
        regions = regions_from_windows(windows)
    segments = segmentize(regions, max_len)
    return aggregate(windows, segments)


def _cluster(seg_embs, algorithm: str, args) -> tuple[list[int], object]:
    """Run one algorithm over segment embeddings; returns (labels, diagnostics)."""
    if algorithm == "spectral":
        params = SpectralParams(
            sigma=args.sigma,
            p_percentile=args.p_percentile,
            soft_multiplier=args.soft_multiplier,
            min_clusters=args.min_speakers,
            max_clusters=args.max_speakers,
            seed=args.seed,
        )
        result = spectral_cluster(seg_embs, params)
        return list(result.clustering.labels), result
    if algorithm == "kmeans":
        n = len(seg_embs)
        if n == 1:
            k = 1
        else:
            k = estimate_k_elbow(
                seg_embs,
                min(args.max_speakers, n),
                KMeansParams(seed=args.seed),
                min_clusters=args.min_speakers,
            )
        result = kmeans(seg_embs, KMeansParams(k=k, seed=args.seed))
        return list(result.labels), None
    clusterer = NaiveOnlineClusterer(threshold=args.threshold)
    result = run_online(clusterer, seg_embs)
    return list(result.labels), None


def cmd_diarize(args) -> int:
    _require(args.max_segment_len > 0, "--max-segment-len must be positive")
    _require(args.sigma >= 0, "--sigma must be >= 0")
    _require(0 < args.p_percentile < 100, "--p-percentile must lie in (0, 100)")
    _require(-1 < args.threshold < 1, "--threshold must lie in (-1, 1)")
    _require(args.min_speakers >= 1, "--min-speakers must be >= 1")
    _require(args.max_speakers >= args.min_speakers,
             "--max-speakers must be >= --min-speakers")
    _require(args.seed >= 0, "--seed must be >= 0")
    _require(not (args.dump_stages and args.algorithm != "spectral"),
             "--dump-stages applies only to --algorithm spectral")

    seg_embs = _segment_embeddings(args.embeddings, args.regions, args.max_segment_len)
    labels, diagnostics = _cluster(seg_embs, args.algorithm, args)
    if args.dump_stages:
        formats.write_pgm_heatmap(diagnostics.affinity, f"{args.dump_stages}_00_affinity.pgm")
        for i, (name, stage) in enumerate(zip(STAGE_NAMES, diagnostics.stages), start=1):
            formats.write_pgm_heatmap(stage, f"{args.dump_stages}_{i:02d}_{name}.pgm")
    recording_id = Path(args.embeddings).stem
    hypothesis = annotation_from_clusters(
        recording_id, [se.interval for se in seg_embs], labels
    )
    Path(args.out).write_text(formats.write_rttm(hypothesis))
    return 0


def _report_lines(recording_id: str, report: DerReport) -> str:
    fields = (
        f"fa_seconds={report.fa_seconds!r}",
        f"miss_seconds={report.miss_seconds!r}",
        f"confusion_seconds={report.confusion_seconds!r}",
        f"ref_speech_seconds={report.ref_speech_seconds!r}",
        f"fa={report.fa!r}",
        f"miss={report.miss!r}",
        f"confusion={report.confusion!r}",
        f"total={report.total!r}",
    )
    return f"recording={recording_id} " + " ".join(fields)


def cmd_evaluate(args) -> int:
    _require(args.collar >= 0, "--collar must be >= 0")
    references = formats.parse_rttm(Path(args.reference).read_text())
    if not references:
        raise InvalidInputError("reference RTTM contains no SPEAKER lines")
    hypotheses = {
        a.recording_id: a for a in formats.parse_rttm(Path(args.hypothesis).read_text())
    }
    uem_map = formats.parse_uem(Path(args.uem).read_text()) if args.uem else None

    rows: list[tuple[str, DerReport]] = []
    for reference in sorted(references, key=lambda a: a.recording_id):
        rec = reference.recording_id
        uem = None
        if uem_map is not None:
            if rec not in uem_map:
                print(f"warning: {rec} not covered by the UEM; skipped", file=sys.stderr)
                continue
            uem = uem_map[rec]
        hypothesis = hypotheses.get(rec)
        if hypothesis is None:
            print(
                f"warning: {rec} missing from the hypothesis; scored as all miss",
                file=sys.stderr,
            )
            hypothesis = Annotation(rec, ())
        opts = EvalOptions(
            collar=args.collar,
            exclude_overlap=not args.no_overlap_exclusion,
            uem=uem,
        )
        rows.append((rec, der(reference, hypothesis, opts)))
    if not rows:
        raise InvalidInputError("nothing to score")
    overall = combine_reports([report for _, report in rows])

    width = max(9, max(len(rec) for rec, _ in rows), len("ALL"))
    print(f"{'recording':<{width}} {'fa%':>8} {'miss%':>8} {'conf%':>8} "
          f"{'total%':>8} {'ref_s':>10}")
    for rec, report in rows + [("ALL", overall)]:
        print(f"{rec:<{width}} {report.fa:8.2f} {report.miss:8.2f} "
              f"{report.confusion:8.2f} {report.total:8.2f} "
              f"{report.ref_speech_seconds:10.2f}")
    for rec, report in rows + [("ALL", overall)]:
        print(_report_lines(rec, report))
    return 0


def cmd_synth(args) -> int:
    _require(args.duration > 0, "--duration must be positive")
    _require(args.speakers >= 1, "--speakers must be >= 1")
    _require(args.dim >= 1, "--dim must be >= 1")
    _require(0 <= args.noise_deg <= 90, "--noise-deg must lie in [0, 90]")
    _require(args.seed >= 0, "--seed must be >= 0")
    scenario = SynthScenario(
        n_speakers=args.speakers,
        duration=args.duration,
        dim=args.dim,
        scenario_kind=args.scenario,
        within_noise_deg=args.noise_deg,
        seed=args.seed,
    )
    reference, windows, regions = generate(scenario)
    # name the recording after the embeddings file so diarize + evaluate line up
    recording_id = Path(args.out_embeddings).stem
    reference = Annotation(recording_id, reference.segments)
    Path(args.out_embeddings).write_text(formats.write_embeddings_csv(windows))
    Path(args.out_reference).write_text(formats.write_rttm(reference))
    Path(args.out_regions).write_text(formats.write_regions_csv(regions))
    return 0


def _parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    _require(len(parts) == 3, "--grid must have the form a:b:step")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--grid values must be numeric, got {text!r}") from None
    _require(step > 0, "--grid step must be positive")
    _require(b >= a, "--grid end must be >= start")
    values = []
    i = 0
    while (v := a + i * step) <= b + 1e-9:
        values.append(v)
        i += 1
    return values


def cmd_sweep(args) -> int:
    grid = _parse_grid(args.grid)
    if args.param == "threshold":
        _require(-1 < grid[0] and grid[-1] < 1, "threshold grid must stay inside (-1, 1)")
    elif args.param == "p-percentile":
        _require(0 < grid[0] and grid[-1] < 100, "p-percentile grid must stay inside (0, 100)")

    list_text = Path(args.embeddings_list).read_text()
    embedding_paths = [line.strip() for line in list_text.splitlines() if line.strip()]
    _require(bool(embedding_paths), "embeddings list is empty")
    references = {
        a.recording_id: a for a in formats.parse_rttm(Path(args.reference).read_text())
    }

    prepared = []
    for path in embedding_paths:
        rec = Path(path).stem
        if rec not in references:
            raise UsageError(f"recording {rec} is missing from the reference RTTM")
        prepared.append((rec, _segment_embeddings(path, None, 0.4)))

    results: list[tuple[float, float]] = []
    for value in grid:
        reports = []
        for rec, seg_embs in prepared:
            if args.param == "sigma":
                result = spectral_cluster(seg_embs, SpectralParams(sigma=value))
                labels = list(result.clustering.labels)
            elif args.param == "p-percentile":
                result = spectral_cluster(seg_embs, SpectralParams(p_percentile=value))
                labels = list(result.clustering.labels)
            else:
                labels = list(run_online(NaiveOnlineClusterer(value), seg_embs).labels)
            hypothesis = annotation_from_clusters(
                rec, [se.interval for se in seg_embs], labels
            )
            reports.append(der(references[rec], hypothesis, EvalOptions()))
        results.append((value, combine_reports(reports).total))

    best = min(range(len(results)), key=lambda i: results[i][1])
    print(f"{args.param:>14} {'DER%':>10}")
    for i, (value, total) in enumerate(results):
        marker = "  *" if i == best else ""
        print(f"{value:14.6g} {total:10.4f}{marker}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diarkit",
        description="Speaker diarization over precomputed window embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("diarize", help="cluster a recording and write hypothesis RTTM")
    d.add_argument("--embeddings", required=True, help="window embeddings CSV")
    d.add_argument("--regions", help="speech regions CSV (default: union of windows)")
    d.add_argument("--algorithm", choices=("spectral", "kmeans", "naive"),
                   default="spectral")
    d.add_argument("--max-segment-len", type=float, default=0.4)
    d.add_argument("--sigma", type=float, default=1.0)
    d.add_argument("--p-percentile", type=float, default=95.0)
    d.add_argument("--soft-multiplier", type=float, default=0.01)
    d.add_argument("--threshold", type=float, default=0.5,
                   help="naive online similarity threshold")
    d.add_argument("--min-speakers", type=int, default=2)
    d.add_argument("--max-speakers", type=int, default=8)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True, help="hypothesis RTTM path")
    d.add_argument("--dump-stages", metavar="PREFIX",
                   help="write affinity + refinement heatmaps as PREFIX_*.pgm")
    d.set_defaults(func=cmd_diarize)

    e = sub.add_parser("evaluate", help="score hypothesis RTTM against reference RTTM")
    e.add_argument("--reference", required=True)
    e.add_argument("--hypothesis", required=True)
    e.add_argument("--collar", type=float, default=0.25)
    e.add_argument("--uem", help="restrict scoring to UEM spans")
    e.add_argument("--no-overlap-exclusion", action="store_true",
                   help="score overlapped reference speech too")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("synth", help="generate a synthetic conversation")
    s.add_argument("--speakers", type=int, required=True)
    s.add_argument("--duration", type=float, required=True)
    s.add_argument("--scenario", choices=SCENARIO_KINDS, default="separated")
    s.add_argument("--noise-deg", type=float, default=5.0)
    s.add_argument("--dim", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-embeddings", required=True)
    s.add_argument("--out-reference", required=True)
    s.add_argument("--out-regions", required=True)
    s.set_defaults(func=cmd_synth)

    w = sub.add_parser("sweep", help="DER as a function of one tuning parameter")
    w.add_argument("--embeddings-list", required=True,
                   help="text file with one embeddings CSV path per line")
    w.add_argument("--reference", required=True)
    w.add_argument("--param", choices=("sigma", "p-percentile", "threshold"),
                   required=True)
    w.add_argument("--grid", required=True, metavar="A:B:STEP")
    w.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return 0 if code == 0 else 2
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InvalidInputError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))
