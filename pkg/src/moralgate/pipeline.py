"""Per-prompt execution: generate, tag, decide, compose, record."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .config import RunConfig
from .corpus import Corpus, Prompt, load_corpus
from .provider import CompletionProvider, GenerationRequest, ProviderError, mock_from_script
from .rulebase import RuleBase, UncertaintyTag, decide, load_rules
from .tagger import EmptyInput, FeatureVector, TaggerConfig, tag

log = logging.getLogger(__name__)

OUTPUTS_FILE = "outputs.json"


def compose(action: str, rationale: str, response: str) -> str:
    return f"Action: {action}\nExplanation: {rationale}\nResponse: {response}"


@dataclass
class PipelineRecord:
    prompt_id: str
    prompt_text: str
    completions: list = field(default_factory=list)
    features: Optional[FeatureVector] = None
    system_tag: Optional[UncertaintyTag] = None
    oracle_tag: Optional[UncertaintyTag] = None
    action: Optional[str] = None
    rationale: Optional[str] = None
    composed_response: Optional[str] = None
    demographic: str = "unknown"
    latency_micros: int = 0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.action is not None

    def to_dict(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "prompt_text": self.prompt_text,
            "completions": list(self.completions),
            "features": None if self.features is None else self.features.as_dict(),
            "system_tag": None if self.system_tag is None else self.system_tag.value,
            "oracle_tag": None if self.oracle_tag is None else self.oracle_tag.value,
            "action": self.action,
            "rationale": self.rationale,
            "composed_response": self.composed_response,
            "demographic": self.demographic,
            "latency_micros": self.latency_micros,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineRecord":
        feats = data.get("features")
        return cls(
            prompt_id=data["prompt_id"],
            prompt_text=data["prompt_text"],
            completions=list(data.get("completions") or []),
            features=None if feats is None else FeatureVector(**feats),
            system_tag=_tag_or_none(data.get("system_tag")),
            oracle_tag=_tag_or_none(data.get("oracle_tag")),
            action=data.get("action"),
            rationale=data.get("rationale"),
            composed_response=data.get("composed_response"),
            demographic=data.get("demographic", "unknown"),
            latency_micros=int(data.get("latency_micros", 0)),
            error=data.get("error"),
        )


def _tag_or_none(value):
    return None if value is None else UncertaintyTag(value)


@dataclass(frozen=True)
class Deps:
    rules: RuleBase
    provider: CompletionProvider
    tagger: TaggerConfig


def load_deps(cfg: RunConfig) -> Deps:
    cfg.check_files()
    return Deps(load_rules(cfg.ruleset_path), mock_from_script(cfg.script_path), cfg.tagger())


def run_prompt(p: Prompt, deps: Deps, k: int = 1, temperature: float = 0.7) -> PipelineRecord:
    rec = PipelineRecord(p.id, p.text, oracle_tag=p.oracle_tag, demographic=p.demographic)
    start = time.perf_counter_ns()
    try:
        result = deps.provider.generate(GenerationRequest(p.text, k, temperature, p.id))
        rec.completions = list(result.completions)
        logprobs = None
        if result.token_logprobs is not None:
            logprobs = [x for row in result.token_logprobs for x in row]
        tagged = tag(result.completions, logprobs, deps.tagger)
    except (ProviderError, EmptyInput) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.latency_micros = (time.perf_counter_ns() - start) // 1000
        return rec
    decision = decide(deps.rules, tagged.tag)
    rec.features = tagged.features
    rec.system_tag = tagged.tag
    rec.action = decision.action
    rec.rationale = decision.rationale
    rec.composed_response = compose(decision.action, decision.rationale, result.completions[0])
    rec.latency_micros = (time.perf_counter_ns() - start) // 1000
    return rec


def run_records(corpus: Corpus | Sequence[Prompt], deps: Deps, k: int = 1,
                temperature: float = 0.7, parallelism: int = 1) -> list[PipelineRecord]:
    prompts = list(corpus)
    if parallelism <= 1 or len(prompts) < 2:
        return [run_prompt(p, deps, k, temperature) for p in prompts]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        # map() yields in submission order, so records follow corpus order
        return list(pool.map(lambda p: run_prompt(p, deps, k, temperature), prompts))


def records_to_json(records: Sequence[PipelineRecord], stable: bool = False) -> str:
    rows = []
    for r in records:
        if stable:
            r = replace(r, latency_micros=0)
        rows.append(r.to_dict())
    return json.dumps(rows, indent=2, ensure_ascii=False) + "\n"


def write_records(records: Sequence[PipelineRecord], path, stable: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(records_to_json(records, stable), encoding="utf-8", newline="\n")
    return path


def load_records(path) -> list[PipelineRecord]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of records")
    return [PipelineRecord.from_dict(d) for d in data]


def run_corpus(cfg: RunConfig, stable: bool = False, write: bool = True,
               corpus: Corpus | None = None, deps: Deps | None = None) -> list[PipelineRecord]:
    """Run every prompt of the configured corpus; optionally write outputs.json."""
    if corpus is None:
        cfg.check_files()
        corpus = load_corpus(cfg.corpus_path)
    deps = deps or load_deps(cfg)
    records = run_records(corpus, deps, cfg.k, cfg.temperature, cfg.parallelism)
    failed = sum(1 for r in records if not r.ok)
    log.info("%s: %d ok, %d failed", getattr(corpus, "name", "corpus"), len(records) - failed, failed)
    if write:
        write_records(records, Path(cfg.output_dir) / OUTPUTS_FILE, stable)
    return records
