"""Two-step chain-of-thought generation.

Step one distils each real transcript into a synopsis and a sentiment
analysis (one completion per item).  Step two rewrites each of those at a
sampled PHQ-8 target, producing synthetic records.  Every model answer must
pass :func:`parse_model_json` and :func:`validate_style`; failures are
re-prompted with a corrective line up to ``max_repairs`` times and then
quarantined.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .corpus import InterviewTranscript, ScoreDistribution, check_score, participant_text
from .errors import (
    AuthError,
    ConfigError,
    DataError,
    GenerationFailed,
    ParseError,
    PipelineAborted,
    RemoteError,
)
from .inference import ChatClient, GenerationParams
from .outputs import parse_model_json, validate_style
from .prompt_kit import (
    ItemKind,
    SamplingStrategy,
    persona_text,
    render_summary_prompt,
    render_synthesis_prompt,
    sample_target_scores,
    severity_description,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_REPAIRS = 2
DEFAULT_FAILURE_CEILING = 0.10

SUMMARIES_FILE = "summaries.jsonl"
EVAL_SUMMARIES_FILE = "eval_summaries.jsonl"
SYNTHETIC_FILE = "synthetic.jsonl"
QUARANTINE_FILE = "quarantine.jsonl"
RUN_FILE = "run.json"


@dataclass(frozen=True)
class SummaryPair:
    session_id: str
    synopsis: str
    sentiment: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("synopsis", "sentiment"):
            text = getattr(self, name)
            if not text.strip():
                raise DataError(f"{self.session_id}: empty {name}")

    def to_dict(self) -> dict:
        return {"session_id": self.session_id, "synopsis": self.synopsis,
                "sentiment": self.sentiment, "meta": self.meta}

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryPair":
        return cls(d["session_id"], d["synopsis"], d["sentiment"], d.get("meta", {}))


@dataclass(frozen=True)
class SyntheticRecord:
    record_id: str
    source_session_id: str
    target_phq8: int
    severity_text: str
    synopsis: str
    sentiment: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        check_score(self.target_phq8, context=self.record_id)
        if self.severity_text != severity_description(self.target_phq8):
            raise DataError(f"{self.record_id}: severity_text does not match score {self.target_phq8}")

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "source_session_id": self.source_session_id,
            "target_phq8": self.target_phq8,
            "severity_text": self.severity_text,
            "synopsis": self.synopsis,
            "sentiment": self.sentiment,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticRecord":
        return cls(d["record_id"], d["source_session_id"], d["target_phq8"], d["severity_text"],
                   d["synopsis"], d["sentiment"], d.get("meta", {}))


@dataclass
class PipelineRun:
    run_id: str
    seed: int
    strategy: str
    sources: int
    variants_per_source: int
    produced: int = 0
    repaired: int = 0
    failed: int = 0
    status: str = "completed"
    config: dict = field(default_factory=dict)

    def check(self):
        if self.produced + self.failed != self.sources * self.variants_per_source:
            raise AssertionError("produced + failed != sources * variants_per_source")

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "seed": self.seed,
            "strategy": self.strategy,
            "status": self.status,
            "counts": {
                "sources": self.sources,
                "variants_per_source": self.variants_per_source,
                "produced": self.produced,
                "repaired": self.repaired,
                "failed": self.failed,
            },
            "config": self.config,
        }


@dataclass
class GenerationResult:
    summaries: list[SummaryPair]
    records: list[SyntheticRecord]
    run: PipelineRun
    quarantine: list[dict] = field(default_factory=list)


def concat_input(synopsis: str, sentiment: str) -> str:
    if not synopsis or not sentiment:
        raise DataError("synopsis and sentiment must both be non-empty")
    return synopsis + " " + sentiment


def _corrective_line(cause: Exception | None, violations, key: str) -> str:
    if violations:
        problems = "; ".join(v.describe() for v in violations)
        return (f"Your previous answer broke the rules ({problems}). Rewrite it in the third person "
                f"on a single line and output only the JSON object with the key \"{key}\".")
    return (f"Your previous answer could not be parsed ({cause}). Output only one JSON object "
            f"on a single line with the key \"{key}\".")


class Generator:
    """Runs the prompt/validate/repair loop against one chat client."""

    def __init__(
        self,
        client: ChatClient,
        params: GenerationParams,
        *,
        max_repairs: int = DEFAULT_MAX_REPAIRS,
        system_text: str | None = None,
    ):
        if max_repairs < 0:
            raise ConfigError("max_repairs must be >= 0")
        self.client = client
        self.params = params
        self.max_repairs = max_repairs
        self.system_text = persona_text() if system_text is None else system_text

    @property
    def model_name(self) -> str:
        return self.client.cfg.model_name

    def _generate_item(self, prompt: str, item: ItemKind, aliases=(), clock=None) -> tuple[str, dict]:
        key = item.value
        user_text = prompt
        attempts = 0
        last_raw = ""
        cause = "no attempt"
        first_started = None
        for round_ in range(self.max_repairs + 1):
            ex = self.client.complete(self.system_text, user_text, self.params, clock=clock)
            attempts += ex.attempt_count
            first_started = ex.started_at if first_started is None else first_started
            last_raw = ex.response_text
            violations = []
            try:
                parsed = parse_model_json(ex.response_text, key, aliases)
            except ParseError as exc:
                cause = type(exc).__name__
                err = exc
            else:
                violations = validate_style(parsed.value)
                if not violations:
                    meta = {
                        "started_at": first_started,
                        "latency_ms": ex.latency_ms,
                        "attempts": attempts,
                        "repair_rounds": round_,
                        "repaired": parsed.repaired or round_ > 0,
                        "repetition_penalty_sent": ex.repetition_penalty_sent,
                    }
                    return parsed.value.strip(), meta
                cause = "StyleViolation"
                err = None
            logger.debug("%s output rejected (%s), round %d", key, cause, round_)
            user_text = prompt + "\n" + _corrective_line(err, violations, key)
        raise GenerationFailed(key, cause, last_raw)

    def _meta(self, items: dict) -> dict:
        return {
            "model_name": self.model_name,
            "params": self.params.to_dict(),
            "items": items,
            "attempts": sum(m["attempts"] for m in items.values()),
            "repaired": any(m["repaired"] for m in items.values()),
        }

    def summarize(self, t: InterviewTranscript, clock=None) -> SummaryPair:
        text = participant_text(t)
        values, metas = {}, {}
        for item in ItemKind:
            prompt = render_summary_prompt(item, text)
            values[item], metas[item.value] = self._generate_item(prompt, item, clock=clock)
        return SummaryPair(t.session_id, values[ItemKind.SYNOPSIS], values[ItemKind.SENTIMENT],
                           self._meta(metas))

    def synthesize(self, pair: SummaryPair, target: int, record_id: str | None = None,
                   clock=None) -> SyntheticRecord:
        check_score(target, context=pair.session_id)
        values, metas = {}, {}
        for item, og in ((ItemKind.SYNOPSIS, pair.synopsis), (ItemKind.SENTIMENT, pair.sentiment)):
            prompt = render_synthesis_prompt(item, og, target)
            aliases = (item.synthetic_name,)
            values[item], metas[item.value] = self._generate_item(prompt, item, aliases, clock=clock)
        return SyntheticRecord(
            record_id=record_id or f"{pair.session_id}-t{target}",
            source_session_id=pair.session_id,
            target_phq8=target,
            severity_text=severity_description(target),
            synopsis=values[ItemKind.SYNOPSIS],
            sentiment=values[ItemKind.SENTIMENT],
            meta=self._meta(metas),
        )


def summarize(t: InterviewTranscript, client: ChatClient, params: GenerationParams, **kw) -> SummaryPair:
    return Generator(client, params, **kw).summarize(t)


def synthesize(pair: SummaryPair, target: int, client: ChatClient, params: GenerationParams,
               **kw) -> SyntheticRecord:
    return Generator(client, params, **kw).synthesize(pair, target)


def _run_id(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def _failure_entry(kind: str, exc: Exception, **extra) -> dict:
    entry = {"kind": kind, "error": type(exc).__name__, "cause": str(exc), **extra}
    if isinstance(exc, GenerationFailed):
        entry["item"] = exc.item
        entry["raw_output"] = exc.raw_output
    return entry


@dataclass
class _SourceOutcome:
    summary: SummaryPair | None = None
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    errors: list = field(default_factory=list)


# remote errors other than auth are per-item problems; auth aborts the run
_ITEM_ERRORS = (GenerationFailed, RemoteError)


def _process_source(gen: Generator, t: InterviewTranscript, targets: Sequence[int], clock) -> _SourceOutcome:
    out = _SourceOutcome()
    try:
        out.summary = gen.summarize(t, clock=clock)
    except AuthError:
        raise
    except _ITEM_ERRORS as exc:
        out.errors.append(exc)
        out.failures.append(_failure_entry("summary", exc, session_id=t.session_id))
        for j, target in enumerate(targets):
            out.failures.append(_failure_entry(
                "synthetic", exc, session_id=t.session_id,
                record_id=f"{t.session_id}-syn{j}", target_phq8=target))
        return out
    for j, target in enumerate(targets):
        record_id = f"{t.session_id}-syn{j}"
        try:
            out.records.append(gen.synthesize(out.summary, target, record_id, clock=clock))
        except AuthError:
            raise
        except _ITEM_ERRORS as exc:
            out.errors.append(exc)
            out.failures.append(_failure_entry(
                "synthetic", exc, session_id=t.session_id, record_id=record_id, target_phq8=target))
    return out


def _dump_line(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n"


def write_jsonl(path, rows: Sequence[dict]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(_dump_line(row))


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n")


def run_generation(
    sources: Sequence[InterviewTranscript],
    k: int,
    strategy: SamplingStrategy,
    client: ChatClient,
    params: GenerationParams,
    *,
    output_dir=None,
    observed: ScoreDistribution | None = None,
    failure_ceiling: float = DEFAULT_FAILURE_CEILING,
    max_workers: int = 4,
    max_repairs: int = DEFAULT_MAX_REPAIRS,
    clock_factory: Callable[[int], Callable[[], float]] | None = None,
    config_snapshot: dict | None = None,
) -> GenerationResult:
    """Summarise every source and produce ``k`` synthetic records from each.

    Target scores are drawn up front (``k`` consecutive draws per source, in
    source order), so the output does not depend on thread scheduling.
    Failed items are quarantined; the run aborts with
    :class:`PipelineAborted` when the failure rate exceeds
    ``failure_ceiling``.  Files are written to ``output_dir`` when given.
    """
    if k < 1:
        raise ConfigError("variants_per_source must be >= 1")
    if not sources:
        raise DataError("no source transcripts to generate from")
    if not 0 <= failure_ceiling <= 1:
        raise ConfigError("failure_ceiling must be within [0, 1]")
    ids = [t.session_id for t in sources]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate session ids among sources")

    targets = sample_target_scores(k * len(sources), strategy, observed)
    gen = Generator(client, params, max_repairs=max_repairs)

    def work(i: int) -> _SourceOutcome:
        clock = clock_factory(i) if clock_factory else None
        return _process_source(gen, sources[i], targets[i * k:(i + 1) * k], clock)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        outcomes = list(pool.map(work, range(len(sources))))

    summaries = [o.summary for o in outcomes if o.summary is not None]
    records = [r for o in outcomes for r in o.records]
    quarantine = [f for o in outcomes for f in o.failures]
    errors = [e for o in outcomes for e in o.errors]

    run = PipelineRun(
        run_id=_run_id({"config": config_snapshot or {}, "seed": strategy.seed, "k": k,
                        "mode": strategy.mode.value, "sources": ids}),
        seed=strategy.seed,
        strategy=strategy.mode.value,
        sources=len(sources),
        variants_per_source=k,
        produced=len(records),
        repaired=sum(1 for r in records if r.meta.get("repaired")),
        failed=k * len(sources) - len(records),
        config=config_snapshot or {},
    )
    run.check()
    aborted = run.failed / (k * len(sources)) > failure_ceiling
    if aborted:
        run.status = "aborted"

    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(out / SUMMARIES_FILE, [s.to_dict() for s in summaries])
        write_jsonl(out / SYNTHETIC_FILE, [r.to_dict() for r in records])
        write_jsonl(out / QUARANTINE_FILE, quarantine)
        write_json(out / RUN_FILE, run.to_dict())

    if aborted:
        remote = [e for e in errors if not isinstance(e, GenerationFailed)]
        if errors and len(remote) == len(errors) and len({type(e) for e in remote}) == 1:
            raise remote[0]
        raise PipelineAborted(
            f"{run.failed} of {k * len(sources)} records failed "
            f"(ceiling {failure_ceiling:.0%}); see {QUARANTINE_FILE}"
        )
    return GenerationResult(summaries, records, run, quarantine)


def summarize_many(
    transcripts: Sequence[InterviewTranscript],
    client: ChatClient,
    params: GenerationParams,
    *,
    max_workers: int = 4,
    max_repairs: int = DEFAULT_MAX_REPAIRS,
    clock_factory: Callable[[int], Callable[[], float]] | None = None,
) -> tuple[list[SummaryPair], list[dict]]:
    """Step one only, for evaluation splits.  Returns (pairs, failures)."""
    gen = Generator(client, params, max_repairs=max_repairs)

    def work(i):
        t = transcripts[i]
        clock = clock_factory(i) if clock_factory else None
        try:
            return gen.summarize(t, clock=clock), None
        except AuthError:
            raise
        except _ITEM_ERRORS as exc:
            return None, _failure_entry("summary", exc, session_id=t.session_id)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        results = list(pool.map(work, range(len(transcripts))))
    return [p for p, _ in results if p is not None], [f for _, f in results if f is not None]


def load_summaries(path) -> list[SummaryPair]:
    return [SummaryPair.from_dict(d) for d in read_jsonl(path)]


def load_records(path) -> list[SyntheticRecord]:
    return [SyntheticRecord.from_dict(d) for d in read_jsonl(path)]


def check_provenance(summaries: Sequence[SummaryPair], records: Sequence[SyntheticRecord]):
    """Raise ``DataError`` unless every record resolves to a summary and
    carries params, attempts and the repaired flag."""
    known = {s.session_id for s in summaries}
    for r in records:
        if r.source_session_id not in known:
            raise DataError(f"{r.record_id}: unknown source {r.source_session_id!r}")
        for key in ("params", "attempts", "repaired"):
            if key not in r.meta:
                raise DataError(f"{r.record_id}: meta lacks {key!r}")

