"""``pipeline`` command line: ingest, generate, evaluate, report.

Exit codes: 0 success, 2 config error, 3 data error, 4 remote error,
5 evaluation error.  Transcript and summary text never reaches stdout
unless ``--show-text`` is given.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import AXES, RunConfig, parse_config
from .corpus import (
    Split,
    corpus_stats,
    load_corpus,
    score_distribution,
    select_split,
    transcript_from_dict,
    transcript_to_dict,
)
from .cot_pipeline import (
    EVAL_SUMMARIES_FILE,
    RUN_FILE,
    SUMMARIES_FILE,
    SYNTHETIC_FILE,
    check_provenance,
    load_records,
    load_summaries,
    read_jsonl,
    run_generation,
    summarize_many,
    write_json,
    write_jsonl,
)
from .embedding_store import EmbeddingStore
from .errors import ConfigError, DataError, DegenerateData, EvaluationError, PipelineError
from .evaluation import (
    histogram_report,
    labeled_records,
    labeled_summaries,
    pca_2d,
    privacy_reports,
    utility_experiment,
)
from .evaluation.utility import item_text
from .inference import ChatClient, EndpointConfig
from .mock_server import BEHAVIORS, MockChatServer, behavior_from_name

logger = logging.getLogger("cotsynth")

CORPUS_CACHE = "corpus.jsonl"
INGEST_SUMMARY = "ingest_summary.json"
HISTOGRAM_FILE = "histogram.csv"
UTILITY_FILE = "utility_report.json"
FIDELITY_FILE = "fidelity_report.json"
FIDELITY_POINTS = "fidelity_points.csv"
PRIVACY_FILE = "privacy_report.json"
REPORT_FILE = "report.json"
MOCK_MODEL = "mock-chat"


class AxisFailed(EvaluationError):
    def __init__(self, axis: str, cause: Exception, guidance: str = ""):
        self.axis = axis
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", EvaluationError.exit_code)
        msg = f"{axis} evaluation failed: {type(cause).__name__}: {cause}"
        super().__init__(msg + (f" ({guidance})" if guidance else ""))


class StepClock:
    """Deterministic clock for mock runs: advances 1 ms per reading."""

    def __init__(self, start: float = 0.0):
        self.now = start

    def __call__(self) -> float:
        t = self.now
        self.now = round(self.now + 0.001, 6)
        return t


def _echo(msg: str = ""):
    print(msg, file=sys.stdout)


def _write_text(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_cached_corpus(cfg: RunConfig):
    path = cfg.paths.output_dir / CORPUS_CACHE
    if not path.exists():
        raise DataError(f"{path} not found; run `pipeline ingest` first")
    return [transcript_from_dict(d) for d in read_jsonl(path)]


def cmd_ingest(cfg: RunConfig, args) -> dict:
    corpus = load_corpus(cfg.paths.corpus_dir, cfg.paths.labels, cfg.paths.splits)
    out = cfg.paths.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / CORPUS_CACHE, [transcript_to_dict(t) for t in corpus])

    dist = score_distribution(corpus)
    by_split = {s.value: select_split(corpus, s) for s in Split}
    hist = histogram_report({**{k: [t.phq8 for t in v] for k, v in by_split.items()},
                             "all": [t.phq8 for t in corpus]})
    _write_text(out / HISTOGRAM_FILE, hist.to_csv())
    summary = {
        "config_hash": cfg.snapshot_hash(),
        "sessions": len(corpus),
        "split_counts": {k: len(v) for k, v in by_split.items()},
        "depressed_count": dist.depressed_count,
        "distribution": dist.to_dict(),
        "corpus_stats": {k: corpus_stats(v) for k, v in by_split.items() if v},
    }
    if corpus:
        summary["corpus_stats"]["all"] = corpus_stats(corpus)
    write_json(out / INGEST_SUMMARY, summary)
    _echo(f"ingested {len(corpus)} sessions "
          + " ".join(f"{k}={v}" for k, v in summary["split_counts"].items())
          + f"; depressed (PHQ-8 >= 10): {dist.depressed_count}")
    return summary


def _chat_client(cfg: RunConfig, mock: str | None) -> ChatClient:
    if mock:
        endpoint = cfg.chat or EndpointConfig("http://mock.invalid", MOCK_MODEL)
        server = MockChatServer(behavior_from_name(mock))
        return ChatClient(endpoint, transport=server.transport(), sleep=lambda s: None,
                          max_concurrency=cfg.max_concurrency)
    if cfg.chat is None:
        raise ConfigError("no chat endpoint configured; add a `chat` section or pass --mock")
    return ChatClient(cfg.chat, max_concurrency=cfg.max_concurrency)


def cmd_generate(cfg: RunConfig, args) -> dict:
    corpus = _load_cached_corpus(cfg)
    train = select_split(corpus, Split.TRAIN)
    if not train:
        raise DataError("the train split is empty")
    clock_factory = (lambda i: StepClock()) if args.mock else None
    snapshot = cfg.snapshot()
    snapshot["mock"] = args.mock
    out = cfg.paths.output_dir
    with _chat_client(cfg, args.mock) as client:
        result = run_generation(
            train, cfg.variants_per_source, cfg.strategy, client, cfg.generation,
            output_dir=out,
            observed=score_distribution(train),
            failure_ceiling=cfg.failure_ceiling,
            max_workers=cfg.max_concurrency,
            max_repairs=cfg.max_repairs,
            clock_factory=clock_factory,
            config_snapshot={"hash": cfg.snapshot_hash(), **snapshot},
        )
        eval_pairs, eval_failures = [], []
        if cfg.summarize_eval_splits:
            held_out = [t for t in corpus if t.split in (Split.DEV, Split.TEST)]
            if held_out:
                eval_pairs, eval_failures = summarize_many(
                    held_out, client, cfg.generation, max_workers=cfg.max_concurrency,
                    max_repairs=cfg.max_repairs, clock_factory=clock_factory)
        write_jsonl(out / EVAL_SUMMARIES_FILE, [p.to_dict() for p in eval_pairs])
    counts = result.run.to_dict()["counts"]
    _echo(f"generated {counts['produced']} synthetic records from {counts['sources']} sources "
          f"(k={counts['variants_per_source']}, failed={counts['failed']}, repaired={counts['repaired']}); "
          f"held-out summaries: {len(eval_pairs)} (failed {len(eval_failures)})")
    if args.show_text and result.records:
        r = result.records[0]
        _echo(f"[{r.record_id} target={r.target_phq8}] {r.synopsis}")
    return counts


def _load_generated(cfg: RunConfig):
    out = cfg.paths.output_dir
    for name in (SUMMARIES_FILE, SYNTHETIC_FILE):
        if not (out / name).exists():
            raise DataError(f"{out / name} not found; run `pipeline generate` first")
    summaries = load_summaries(out / SUMMARIES_FILE)
    records = load_records(out / SYNTHETIC_FILE)
    held_out = load_summaries(out / EVAL_SUMMARIES_FILE) if (out / EVAL_SUMMARIES_FILE).exists() else []
    check_provenance(summaries, records)
    return summaries, records, held_out


def _axis_utility(cfg, store, corpus, summaries, records, held_out) -> dict:
    labels = {t.session_id: t.phq8 for t in corpus}
    split_of = {t.session_id: t.split for t in corpus}
    src = cfg.evaluation.utility_text
    test = [p for p in held_out if split_of.get(p.session_id) is Split.TEST]
    dev = [p for p in held_out if split_of.get(p.session_id) is Split.DEV]
    if not test:
        logger.warning("no summarised test split; utility axis skipped")
        return {"config_hash": cfg.snapshot_hash(), "text_source": src, "status": "skipped",
                "reason": "no labelled test split", "rows": []}
    report = utility_experiment(
        labeled_summaries(summaries, labels, src),
        labeled_records(records, src),
        labeled_summaries(test, labels, src),
        store,
        cfg.evaluation.lam,
        dev=labeled_summaries(dev, labels, src) if dev else None,
        lambda_grid=cfg.evaluation.lambda_grid,
    )
    return {"config_hash": cfg.snapshot_hash(), "text_source": src, "status": "ok", **report.to_dict()}


def _texts(cfg, summaries, records):
    src = cfg.evaluation.embed_source
    real = [(p.session_id, item_text(p.synopsis, p.sentiment, src)) for p in summaries]
    synth = [(r.record_id, item_text(r.synopsis, r.sentiment, src)) for r in records]
    return real, synth


def _axis_fidelity(cfg, store, summaries, records) -> tuple[dict, str]:
    real, synth = _texts(cfg, summaries, records)
    vectors = store.embed(real + synth)
    labels = ["real"] * len(real) + ["synthetic"] * len(synth)
    mask = None if cfg.evaluation.pca_fit == "joint" else [lab == "real" for lab in labels]
    rep = pca_2d(vectors, labels, fit_mask=mask)
    body = {"config_hash": cfg.snapshot_hash(), "embed_source": cfg.evaluation.embed_source,
            **rep.to_dict()}
    body["fit_on"] = cfg.evaluation.pca_fit
    return body, rep.to_csv()


def _axis_privacy(cfg, store, summaries, records) -> dict:
    real, synth = _texts(cfg, summaries, records)
    if not synth:
        raise DataError("privacy needs at least one synthetic record")
    vr = store.embed(real)
    vs = store.embed(synth)
    reports = privacy_reports(vr, vs, cfg.evaluation.metric)
    return {"config_hash": cfg.snapshot_hash(), "embed_source": cfg.evaluation.embed_source,
            "metric": cfg.evaluation.metric, "rows": [r.to_dict() for r in reports]}


_GUIDANCE = {
    DegenerateData: "PCA needs at least 3 texts with non-zero spread; generate more records",
}


def cmd_evaluate(cfg: RunConfig, args) -> dict:
    axes = args.axes or list(AXES)
    corpus = _load_cached_corpus(cfg)
    summaries, records, held_out = _load_generated(cfg)
    out = cfg.paths.output_dir
    written = {}
    store = EmbeddingStore(cfg.embeddings)
    try:
        for axis in AXES:
            if axis not in axes:
                continue
            try:
                if axis == "utility":
                    write_json(out / UTILITY_FILE, _axis_utility(cfg, store, corpus, summaries, records, held_out))
                    written[axis] = UTILITY_FILE
                elif axis == "fidelity":
                    body, points = _axis_fidelity(cfg, store, summaries, records)
                    write_json(out / FIDELITY_FILE, body)
                    _write_text(out / FIDELITY_POINTS, points)
                    written[axis] = FIDELITY_FILE
                else:
                    write_json(out / PRIVACY_FILE, _axis_privacy(cfg, store, summaries, records))
                    written[axis] = PRIVACY_FILE
            except PipelineError as exc:
                raise AxisFailed(axis, exc, _GUIDANCE.get(type(exc), "")) from exc
    finally:
        store.close()
    _echo("wrote " + ", ".join(f"{axis} -> {name}" for axis, name in written.items()))
    return written


def cmd_report(cfg: RunConfig, args) -> dict:
    out = cfg.paths.output_dir
    corpus = _load_cached_corpus(cfg)
    datasets = {s.value: [t.phq8 for t in select_split(corpus, s)] for s in Split}
    datasets["all"] = [t.phq8 for t in corpus]
    report: dict = {"config_hash": cfg.snapshot_hash()}
    if (out / SYNTHETIC_FILE).exists():
        records = load_records(out / SYNTHETIC_FILE)
        datasets["synthetic"] = [r.target_phq8 for r in records]
        datasets["combined"] = datasets["train"] + datasets["synthetic"]
    hist = histogram_report(datasets)
    _write_text(out / HISTOGRAM_FILE, hist.to_csv())
    report["histogram"] = hist.to_dict()
    for key, name in (("run", RUN_FILE), ("utility", UTILITY_FILE),
                      ("fidelity", FIDELITY_FILE), ("privacy", PRIVACY_FILE)):
        if (out / name).exists():
            report[key] = json.loads((out / name).read_text(encoding="utf-8"))
    report.get("fidelity", {}).pop("component_basis", None)
    write_json(out / REPORT_FILE, report)

    _echo(f"sessions: {len(corpus)}; synthetic: {len(datasets.get('synthetic', []))}")
    for name in ("train", "combined"):
        if name in hist.counts:
            _echo(f"  {name:<9} max/min bin ratio {hist.max_min_ratio(name):.3g}")
    for row in report.get("utility", {}).get("rows", []):
        _echo(f"  utility {row['config']:<15} RMSE {row['rmse']:.3f}  MAE {row['mae']:.3f}")
    for row in report.get("privacy", {}).get("rows", []):
        _echo(f"  privacy {row['pairing']:<18} min {row['min_dist']:.3f}  avg-min {row['avg_min_dist']:.3f}")
    if "fidelity" in report:
        r1, r2 = report["fidelity"]["explained_variance_ratio"]
        _echo(f"  fidelity explained variance {r1:.3f} / {r2:.3f}")
    if args.show_text and (out / SUMMARIES_FILE).exists():
        first = load_summaries(out / SUMMARIES_FILE)[:1]
        for p in first:
            _echo(f"[{p.session_id}] {p.synopsis}")
    return report


COMMANDS = {"ingest": cmd_ingest, "generate": cmd_generate, "evaluate": cmd_evaluate, "report": cmd_report}


def _axes(value: str) -> list[str]:
    axes = [a.strip() for a in value.split(",") if a.strip()]
    bad = [a for a in axes if a not in AXES]
    if bad or not axes:
        raise argparse.ArgumentTypeError(f"axes must be a comma list drawn from {','.join(AXES)}")
    return axes


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override sampling.seed")
    common.add_argument("--mock", choices=sorted(BEHAVIORS), help="use the in-process mock chat server")
    common.add_argument("--axes", type=_axes, help="evaluation axes, e.g. utility,privacy")
    common.add_argument("--metric", choices=["l2", "cosine"], help="override evaluation.metric")
    common.add_argument("--show-text", action="store_true", help="allow transcript/summary text on stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pipeline", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__)
    return parser


def resolve_config(args) -> RunConfig:
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    if args.seed is not None:
        data.setdefault("sampling", {})["seed"] = args.seed
    if args.metric:
        data.setdefault("evaluation", {})["metric"] = args.metric
    return parse_config(data, path.parent)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg, args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
