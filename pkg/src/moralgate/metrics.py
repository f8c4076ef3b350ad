"""Evaluation metrics, fairness audit and ablation sweep."""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence

from .config import RunConfig
from .corpus import Corpus, load_corpus, mask_demographics
from .pipeline import Deps, PipelineRecord, load_deps, run_records
from .rulebase import TAGS, RuleBase

log = logging.getLogger(__name__)

CSV_COLUMNS = ("prompt_id", "domain", "demographic", "oracle_tag", "system_tag", "action",
               "flesch_reading_ease", "completeness_ratio", "error")
GROUPS = ("male", "female")
ABLATIONS = {
    "full": (False, False),
    "hedge_ablated": (True, False),
    "negation_ablated": (False, True),
    "both_ablated": (True, True),
}


class DegenerateText(ValueError):
    pass


class AlignmentError(ValueError):
    pass


# -- text metrics ----------------------------------------------------------------

_FRE_WORD = re.compile(r"[A-Za-z]+(?:['’][A-Za-z]+)*")
_SENTENCE_END = re.compile(r"[.!?]+")


def count_syllables(word: str) -> int:
    """Vowel-group syllable estimate with a silent-e rule and a floor of one."""
    w = re.sub(r"[^a-z]", "", word.lower())
    n = len(re.findall(r"[aeiouy]+", w))
    if n > 1 and w.endswith("e") and not w.endswith(("le", "ee")):
        n -= 1
    return max(1, n)


def readability(text: str) -> float:
    """Flesch Reading Ease (higher is easier)."""
    words = _FRE_WORD.findall(text)
    if not words:
        raise DegenerateText("text has no words")
    sentences = sum(1 for s in _SENTENCE_END.split(text) if _FRE_WORD.search(s))
    syllables = sum(count_syllables(w) for w in words)
    return 206.835 - 1.015 * (len(words) / sentences) - 84.6 * (syllables / len(words))


def completeness(rationale: str, output: str) -> float:
    """Rationale length over output length, in whitespace-delimited words."""
    out_words = len(output.split())
    if out_words == 0:
        raise DegenerateText("output is empty")
    return len(rationale.split()) / out_words


# -- evaluation ------------------------------------------------------------------

@dataclass
class EvaluationReport:
    coverage: float
    tagging_accuracy: float
    fairness_delta: float
    readability_mean: float
    completeness_mean: float
    confusion: list
    n_prompts: int
    rows: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "n_prompts": self.n_prompts,
            "coverage": round(self.coverage, 4),
            "tagging_accuracy": round(self.tagging_accuracy, 4),
            "fairness_delta": round(self.fairness_delta, 4),
            "readability_mean": round(self.readability_mean, 2),
            "completeness_mean": round(self.completeness_mean, 4),
            "confusion": {"labels": [t.value for t in TAGS], "oracle_by_system": self.confusion},
        }


def _align(records: Sequence[PipelineRecord], corpus: Corpus) -> list:
    prompts = corpus.by_id()
    pairs = []
    for r in records:
        if r.prompt_id not in prompts:
            raise AlignmentError(f"record {r.prompt_id!r} has no matching prompt in {corpus.name}")
        pairs.append((r, prompts[r.prompt_id]))
    return pairs


def confusion_matrix(pairs) -> list:
    m = [[0] * len(TAGS) for _ in TAGS]
    for r, p in pairs:
        if r.ok:
            m[p.oracle_tag.rank][r.system_tag.rank] += 1
    return m


def accuracy_from(confusion: list) -> float:
    total = sum(map(sum, confusion))
    if total == 0:
        return 0.0
    return sum(confusion[i][i] for i in range(len(confusion))) / total


def evaluation_rows(pairs) -> list:
    rows = []
    for r, p in pairs:
        row = {"prompt_id": p.id, "domain": p.domain, "demographic": p.demographic,
               "oracle_tag": p.oracle_tag.value, "system_tag": "", "action": "",
               "flesch_reading_ease": None, "completeness_ratio": None, "error": r.error or ""}
        if r.ok:
            row["system_tag"] = r.system_tag.value
            row["action"] = r.action
            row["flesch_reading_ease"] = readability(r.rationale)
            row["completeness_ratio"] = completeness(r.rationale, r.completions[0])
        rows.append(row)
    return rows


def evaluate(records: Sequence[PipelineRecord], corpus: Corpus) -> EvaluationReport:
    pairs = _align(records, corpus)
    n = len(corpus)
    ok = [(r, p) for r, p in pairs if r.ok]
    confusion = confusion_matrix(pairs)
    rows = evaluation_rows(pairs)
    fre = [row["flesch_reading_ease"] for row in rows if row["flesch_reading_ease"] is not None]
    comp = [row["completeness_ratio"] for row in rows if row["completeness_ratio"] is not None]
    return EvaluationReport(
        coverage=len(ok) / n if n else 1.0,
        tagging_accuracy=accuracy_from(confusion),
        fairness_delta=fairness_audit(records, corpus).delta,
        readability_mean=sum(fre) / len(fre) if fre else 0.0,
        completeness_mean=sum(comp) / len(comp) if comp else 0.0,
        confusion=confusion,
        n_prompts=n,
        rows=rows,
    )


def evaluation_csv(report: EvaluationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        fre, comp = row["flesch_reading_ease"], row["completeness_ratio"]
        writer.writerow([
            row["prompt_id"], row["domain"], row["demographic"], row["oracle_tag"],
            row["system_tag"], row["action"],
            "" if fre is None else f"{fre:.2f}",
            "" if comp is None else f"{comp:.4f}",
            row["error"],
        ])
    return buf.getvalue()


def write_evaluation(report: EvaluationReport, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "evaluation.csv"
    csv_path.write_text(evaluation_csv(report), encoding="utf-8", newline="\n")
    summary_path = out / "evaluation_summary.json"
    summary_path.write_text(json.dumps(report.summary(), indent=2) + "\n", encoding="utf-8",
                            newline="\n")
    return csv_path, summary_path


# -- fairness ----------------------------------------------------------------------

@dataclass
class FairnessReport:
    per_group_action_freq: dict
    delta: float
    excluded_unknown: int
    group_sizes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "delta": round(self.delta, 4),
            "excluded_unknown": self.excluded_unknown,
            "group_sizes": self.group_sizes,
            "per_group_action_freq": {
                g: {a: round(f, 4) for a, f in freqs.items()}
                for g, freqs in self.per_group_action_freq.items()
            },
        }


def _actions(records: Iterable[PipelineRecord], rules: Optional[RuleBase]) -> list:
    found = {r.action for r in records if r.ok}
    if rules is not None:
        found |= {str(f.args[1]) for f in rules.facts if f.predicate == "action" and f.arity == 2}
    return sorted(found)


def fairness_audit(records: Sequence[PipelineRecord], corpus: Corpus,
                   rules: Optional[RuleBase] = None) -> FairnessReport:
    """Per-group action frequencies and the male/female gap.

    The gap is the largest absolute frequency difference over all actions.
    Prompts with an unknown demographic are reported but do not enter the gap.
    """
    pairs = _align(records, corpus)
    actions = _actions(records, rules)
    freqs, sizes = {}, {}
    for group in GROUPS + ("unknown",):
        members = [r for r, p in pairs if p.demographic == group and r.ok]
        sizes[group] = len(members)
        if not members and group in GROUPS:
            log.warning("fairness audit: group %r has no valid records; frequencies set to 0", group)
        freqs[group] = {a: (sum(1 for r in members if r.action == a) / len(members)
                            if members else 0.0) for a in actions}
    delta = max((abs(freqs["male"][a] - freqs["female"][a]) for a in actions), default=0.0)
    excluded = sum(1 for _, p in pairs if p.demographic == "unknown")
    return FairnessReport(freqs, delta, excluded, sizes)


@dataclass
class MaskingComparison:
    original: FairnessReport
    masked: FairnessReport

    def to_dict(self) -> dict:
        return {"original": self.original.to_dict(), "masked": self.masked.to_dict()}

    def table(self) -> list:
        """Rows of (label, original, masked)."""
        rows = [("fairness_delta", self.original.delta, self.masked.delta)]
        for group in GROUPS:
            for action in self.original.per_group_action_freq[group]:
                rows.append((f"{action} freq ({group})",
                             self.original.per_group_action_freq[group][action],
                             self.masked.per_group_action_freq[group].get(action, 0.0)))
        return rows


def masking_comparison(cfg: RunConfig, deps: Deps | None = None,
                       corpus: Corpus | None = None) -> MaskingComparison:
    deps = deps or load_deps(cfg)
    corpus = corpus or load_corpus(cfg.corpus_path)
    masked = mask_demographics(corpus)
    # scripted completions are looked up by prompt id, so they stay aligned after masking
    before = run_records(corpus, deps, cfg.k, cfg.temperature, cfg.parallelism)
    after = run_records(masked, deps, cfg.k, cfg.temperature, cfg.parallelism)
    return MaskingComparison(fairness_audit(before, corpus, deps.rules),
                             fairness_audit(after, masked, deps.rules))


# -- ablation ------------------------------------------------------------------------

@dataclass
class AblationReport:
    rows: dict

    def to_dict(self) -> dict:
        return {name: round(acc, 4) for name, acc in self.rows.items()}


def ablation_sweep(cfg: RunConfig, deps: Deps | None = None,
                   corpus: Corpus | None = None) -> AblationReport:
    deps = deps or load_deps(cfg)
    corpus = corpus or load_corpus(cfg.corpus_path)
    rows = {}
    for name, (hedge, negation) in ABLATIONS.items():
        variant = Deps(deps.rules, deps.provider, deps.tagger.with_ablation(hedge, negation))
        records = run_records(corpus, variant, cfg.k, cfg.temperature, cfg.parallelism)
        rows[name] = accuracy_from(confusion_matrix(_align(records, corpus)))
    return AblationReport(rows)


# -- error analysis ----------------------------------------------------------------------

class Mismatch(NamedTuple):
    prompt_id: str
    oracle: str
    system: str
    excerpt: str


def error_analysis(records: Sequence[PipelineRecord], corpus: Corpus) -> list:
    rows = [Mismatch(p.id, p.oracle_tag.value, r.system_tag.value, r.completions[0][:60])
            for r, p in _align(records, corpus)
            if r.ok and r.system_tag != p.oracle_tag]
    return sorted(rows)
