"""Run configuration: one JSON file, relative paths resolved against it."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .embedding_store import DEFAULT_HASH_DIM, EmbeddingProvider
from .errors import ConfigError
from .evaluation.privacy import METRICS
from .evaluation.utility import DEFAULT_LAMBDA, LAMBDA_GRID
from .inference import EndpointConfig, GenerationParams
from .prompt_kit import SamplingMode, SamplingStrategy

AXES = ("utility", "fidelity", "privacy")
TEXT_SOURCES = ("concat", "synopsis", "sentiment")


@dataclass
class Paths:
    corpus_dir: Path
    labels: Path
    splits: Path
    output_dir: Path


@dataclass
class EvaluationSettings:
    metric: str = "l2"
    lam: float | None = DEFAULT_LAMBDA
    lambda_grid: tuple[float, ...] = LAMBDA_GRID
    utility_text: str = "concat"
    embed_source: str = "synopsis"
    pca_fit: str = "joint"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"evaluation.metric must be one of {METRICS}")
        for name in ("utility_text", "embed_source"):
            if getattr(self, name) not in TEXT_SOURCES:
                raise ConfigError(f"evaluation.{name} must be one of {TEXT_SOURCES}")
        if self.pca_fit not in ("joint", "real"):
            raise ConfigError("evaluation.pca_fit must be 'joint' or 'real'")
        if self.lam is not None and self.lam < 0:
            raise ConfigError("evaluation.lambda must be >= 0 or 'auto'")
        if not self.lambda_grid or any(v < 0 for v in self.lambda_grid):
            raise ConfigError("evaluation.lambda_grid must hold non-negative values")


@dataclass
class RunConfig:
    paths: Paths
    seed: int
    chat: EndpointConfig | None = None
    embeddings: EmbeddingProvider = field(default_factory=EmbeddingProvider)
    generation: GenerationParams = field(default_factory=GenerationParams)
    sampling_mode: SamplingMode = SamplingMode.UNIFORM
    variants_per_source: int = 3
    max_concurrency: int = 4
    max_repairs: int = 2
    failure_ceiling: float = 0.10
    summarize_eval_splits: bool = True
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def strategy(self) -> SamplingStrategy:
        return SamplingStrategy(self.sampling_mode, self.seed)

    def snapshot(self) -> dict:
        """Canonical JSON-able view of the effective configuration."""
        snap = json.loads(json.dumps(self.raw, sort_keys=True))
        snap.setdefault("sampling", {})["seed"] = self.seed
        return snap

    def snapshot_hash(self) -> str:
        blob = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _take(section: dict, cls, where: str) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return dict(section)


def _endpoint(section: dict, where: str, default_key: str) -> EndpointConfig:
    data = _take(section, EndpointConfig, where)
    data.setdefault("api_key_source", default_key)
    for key in ("base_url", "model_name"):
        if key not in data:
            raise ConfigError(f"{where}.{key} is required")
    try:
        return EndpointConfig(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _resolve(base: Path, value: Any, where: str) -> Path:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where} must be a non-empty path string")
    p = Path(value)
    return p if p.is_absolute() else (base / p)


def parse_config(data: dict, base_dir: Path, *, check_paths: bool = True) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known = {"paths", "chat", "embeddings", "generation", "sampling", "variants_per_source",
             "max_concurrency", "max_repairs", "failure_ceiling", "summarize_eval_splits", "evaluation"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}")

    p = data.get("paths")
    if not isinstance(p, dict):
        raise ConfigError("paths section is required")
    paths = Paths(**{k: _resolve(base_dir, p.get(k), f"paths.{k}")
                     for k in ("corpus_dir", "labels", "splits", "output_dir")})
    extra = sorted(set(p) - {"corpus_dir", "labels", "splits", "output_dir"})
    if extra:
        raise ConfigError(f"paths: unknown keys {extra}")
    if check_paths:
        for name in ("corpus_dir", "labels", "splits"):
            if not getattr(paths, name).exists():
                raise ConfigError(f"paths.{name} does not exist: {getattr(paths, name)}")

    sampling = data.get("sampling") or {}
    if "seed" not in sampling:
        raise ConfigError("sampling.seed is required (runs must be reproducible)")
    try:
        mode = SamplingMode(sampling.get("mode", "uniform"))
    except ValueError:
        raise ConfigError(f"sampling.mode must be one of {[m.value for m in SamplingMode]}") from None
    seed = sampling["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("sampling.seed must be an integer")

    chat = _endpoint(data["chat"], "chat", "INFERENCE_API_KEY") if data.get("chat") else None

    emb = dict(data.get("embeddings") or {})
    use_cache = emb.pop("cache", True)
    kind = emb.pop("kind", "hashing")
    dim = emb.pop("dim", DEFAULT_HASH_DIM)
    batch = emb.pop("batch_size", 64)
    endpoint = emb.pop("endpoint", None)
    if emb:
        raise ConfigError(f"embeddings: unknown keys {sorted(emb)}")
    endpoint_cfg = _endpoint(endpoint, "embeddings.endpoint", "EMBEDDING_API_KEY") if endpoint else None
    provider = EmbeddingProvider(kind=kind, dim=dim, endpoint=endpoint_cfg, batch_size=batch)
    if use_cache:
        cache = paths.output_dir / "cache" / f"embeddings-{provider.fingerprint()}.jsonl"
        provider = dataclasses.replace(provider, cache_path=str(cache))

    try:
        generation = GenerationParams(**_take(data.get("generation") or {}, GenerationParams, "generation"))
    except TypeError as exc:
        raise ConfigError(f"generation: {exc}") from None

    ev = dict(data.get("evaluation") or {})
    if "lambda" in ev:
        lam = ev.pop("lambda")
        ev["lam"] = None if lam == "auto" else lam
    if "lambda_grid" in ev:
        ev["lambda_grid"] = tuple(ev["lambda_grid"])
    evaluation = EvaluationSettings(**_take(ev, EvaluationSettings, "evaluation"))

    cfg = RunConfig(
        paths=paths,
        seed=seed,
        chat=chat,
        embeddings=provider,
        generation=generation,
        sampling_mode=mode,
        variants_per_source=data.get("variants_per_source", 3),
        max_concurrency=data.get("max_concurrency", 4),
        max_repairs=data.get("max_repairs", 2),
        failure_ceiling=data.get("failure_ceiling", 0.10),
        summarize_eval_splits=data.get("summarize_eval_splits", True),
        evaluation=evaluation,
        raw=data,
    )
    if cfg.variants_per_source < 1:
        raise ConfigError("variants_per_source must be >= 1")
    if cfg.max_concurrency < 1:
        raise ConfigError("max_concurrency must be >= 1")
    if not 0 <= cfg.failure_ceiling <= 1:
        raise ConfigError("failure_ceiling must be within [0, 1]")
    return cfg


def load_config(path, *, check_paths: bool = True) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(data, path.parent, check_paths=check_paths)
