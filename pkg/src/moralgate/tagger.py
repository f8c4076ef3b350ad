"""Heuristic uncertainty tagger.

Features are hedge-cue counts, negation/impossibility-cue counts, lexical
disagreement across sampled completions and mean token log-probability.
They are combined into a bounded score and thresholded into three levels.
"""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .rulebase import UncertaintyTag

DEFAULT_HEDGES = (
    "may", "might", "possibly", "could", "unclear", "uncertain", "not certain",
    "roughly", "approximately", "suggest", "likely", "potentially", "estimated",
    "not yet been finalised",
)
DEFAULT_NEGATIONS = (
    "insufficient evidence", "not possible to determine", "cannot determine",
    "may not be reliable", "no evidence", "cannot be confirmed",
)

HEDGE_CAP = 3
NEGATION_CAP = 2
LOGPROB_SCALE = 5.0
BOUNDARY_EPS = 1e-9

_WORD_RE = re.compile(r"\w+(?:['’]\w+)*")


class EmptyInput(ValueError):
    pass


def words(text: str) -> list[str]:
    """Lowercased word tokens; punctuation and whitespace runs are dropped."""
    return _WORD_RE.findall(text.lower().replace("’", "'"))


def _phrases(lexicon) -> tuple:
    out = {tuple(words(p)) for p in lexicon}
    out.discard(())
    return tuple(sorted(out))


@dataclass(frozen=True)
class TaggerConfig:
    hedge_lexicon: tuple = DEFAULT_HEDGES
    negation_lexicon: tuple = DEFAULT_NEGATIONS
    weight_hedge: float = 0.6
    weight_negation: float = 1.5
    weight_variance: float = 0.4
    weight_logprob: float = 0.3
    threshold_medium: float = 0.35
    threshold_high: float = 0.75
    ablate_hedge: bool = False
    ablate_negation: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hedge_lexicon", tuple(p.lower() for p in self.hedge_lexicon))
        object.__setattr__(self, "negation_lexicon", tuple(p.lower() for p in self.negation_lexicon))
        for name in ("weight_hedge", "weight_negation", "weight_variance", "weight_logprob"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 <= self.threshold_medium < self.threshold_high:
            raise ValueError("need 0 <= threshold_medium < threshold_high")
        if not self.hedge_lexicon and not self.ablate_hedge:
            raise ValueError("hedge_lexicon is empty but hedge cues are enabled")
        if not self.negation_lexicon and not self.ablate_negation:
            raise ValueError("negation_lexicon is empty but negation cues are enabled")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "TaggerConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown tagger option(s): {', '.join(sorted(unknown))}")
        kwargs = dict(data)
        for key in ("hedge_lexicon", "negation_lexicon"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    def with_ablation(self, hedge: bool = False, negation: bool = False) -> "TaggerConfig":
        return replace(self, ablate_hedge=hedge, ablate_negation=negation)


@dataclass(frozen=True)
class FeatureVector:
    hedge_hits: int = 0
    negation_hits: int = 0
    ensemble_disagreement: float = 0.0
    mean_logprob: Optional[float] = None
    word_count: int = 0

    def as_dict(self) -> dict:
        return {
            "hedge_hits": self.hedge_hits,
            "negation_hits": self.negation_hits,
            "ensemble_disagreement": self.ensemble_disagreement,
            "mean_logprob": self.mean_logprob,
            "word_count": self.word_count,
        }


@dataclass(frozen=True)
class TagResult:
    tag: UncertaintyTag
    score: float
    features: FeatureVector = field(default_factory=FeatureVector)


@functools.lru_cache(maxsize=32)
def _cue_table(hedge_lexicon: tuple, negation_lexicon: tuple):
    table: dict[tuple, str] = {}
    for p in _phrases(hedge_lexicon):
        table[p] = "hedge"
    for p in _phrases(negation_lexicon):
        table[p] = "negation"
    lengths = sorted({len(p) for p in table}, reverse=True)
    return table, lengths


def count_cues(tokens: Sequence[str], cfg: TaggerConfig) -> tuple[int, int]:
    """Count hedge and negation phrases, longest match first, no overlaps.

    A phrase listed in both lexicons counts as negation.
    """
    table, lengths = _cue_table(cfg.hedge_lexicon, cfg.negation_lexicon)
    hedges = negations = 0
    i = 0
    while i < len(tokens):
        for n in lengths:
            kind = table.get(tuple(tokens[i:i + n]))
            if kind is not None:
                if kind == "hedge":
                    hedges += 1
                else:
                    negations += 1
                i += n
                break
        else:
            i += 1
    return hedges, negations


def jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def disagreement(completions: Sequence[str]) -> float:
    """One minus the mean pairwise Jaccard similarity of word sets."""
    if len(completions) < 2:
        return 0.0
    sets = [set(words(c)) for c in completions]
    sims = [jaccard(a, b) for a, b in itertools.combinations(sets, 2)]
    return 1.0 - sum(sims) / len(sims)


def extract_features(completions: Sequence[str], logprobs: Optional[Sequence[float]] = None,
                     cfg: TaggerConfig | None = None) -> FeatureVector:
    cfg = cfg or TaggerConfig()
    if not completions:
        raise EmptyInput("no completions to tag")
    tokens = words(completions[0])
    if not tokens:
        raise EmptyInput("first completion has no words")
    hedges, negations = count_cues(tokens, cfg)
    mean_lp = None
    if logprobs:
        mean_lp = sum(logprobs) / len(logprobs)
    return FeatureVector(
        hedge_hits=0 if cfg.ablate_hedge else hedges,
        negation_hits=0 if cfg.ablate_negation else negations,
        ensemble_disagreement=disagreement(completions),
        mean_logprob=mean_lp,
        word_count=len(tokens),
    )


def score(features: FeatureVector, cfg: TaggerConfig | None = None) -> float:
    cfg = cfg or TaggerConfig()
    penalty = 0.0
    if features.mean_logprob is not None:
        penalty = min(max(-features.mean_logprob / LOGPROB_SCALE, 0.0), 1.0)
    return (cfg.weight_hedge * min(features.hedge_hits, HEDGE_CAP) / HEDGE_CAP
            + cfg.weight_negation * min(features.negation_hits, NEGATION_CAP) / NEGATION_CAP
            + cfg.weight_variance * features.ensemble_disagreement
            + cfg.weight_logprob * penalty)


def threshold(value: float, cfg: TaggerConfig) -> UncertaintyTag:
    # scores within BOUNDARY_EPS of a threshold take the more cautious tag
    if value >= cfg.threshold_high - BOUNDARY_EPS:
        return UncertaintyTag.HIGH
    if value >= cfg.threshold_medium - BOUNDARY_EPS:
        return UncertaintyTag.MEDIUM
    return UncertaintyTag.LOW


def tag(completions: Sequence[str] | str, logprobs: Optional[Sequence[float]] = None,
        cfg: TaggerConfig | None = None) -> TagResult:
    cfg = cfg or TaggerConfig()
    if isinstance(completions, str):
        completions = [completions]
    features = extract_features(completions, logprobs, cfg)
    s = score(features, cfg)
    return TagResult(threshold(s, cfg), s, features)
