"""Synthetic prompt corpora: JSONL schema, demographic masking, seeded generator."""

from __future__ import annotations

import json
import random
import re
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional

from .rulebase import TAGS, UncertaintyTag

DOMAINS = ("clinical", "legal", "environmental")
DEMOGRAPHICS = ("male", "female", "unknown")
SUFFICIENCY = ("complete", "partial")
SEVERITY = ("low", "high")
FIELDS = ("id", "domain", "text", "oracle_tag", "demographic", "age",
          "info_sufficiency", "risk_severity")

DEFAULT_SHAPE = {"clinical": (3, 4, 3), "legal": (3, 4, 3)}

_DEMO_WITH_AGE = re.compile(r"\b(?:male|female),\s*\d{1,3}\b", re.IGNORECASE)
_DEMO_BARE = re.compile(r"\b(?:male|female)\b", re.IGNORECASE)


class SchemaError(ValueError):
    pass


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Prompt:
    id: str
    domain: str
    text: str
    oracle_tag: UncertaintyTag
    demographic: str = "unknown"
    age: Optional[int] = None
    info_sufficiency: str = "complete"
    risk_severity: str = "low"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "domain": self.domain,
            "text": self.text,
            "oracle_tag": self.oracle_tag.value,
            "demographic": self.demographic,
            "age": self.age,
            "info_sufficiency": self.info_sufficiency,
            "risk_severity": self.risk_severity,
        }

    @classmethod
    def from_dict(cls, data: dict, where: str = "") -> "Prompt":
        prefix = f"{where}: " if where else ""
        missing = [k for k in FIELDS if k not in data]
        if missing:
            raise SchemaError(f"{prefix}missing field(s) {', '.join(missing)}")
        extra = sorted(set(data) - set(FIELDS))
        if extra:
            raise SchemaError(f"{prefix}unknown field(s) {', '.join(extra)}")
        for key in ("id", "text"):
            if not isinstance(data[key], str) or not data[key]:
                raise SchemaError(f"{prefix}{key} must be a non-empty string")
        _check_enum(data, "domain", DOMAINS, prefix)
        _check_enum(data, "oracle_tag", tuple(t.value for t in TAGS), prefix)
        _check_enum(data, "demographic", DEMOGRAPHICS, prefix)
        _check_enum(data, "info_sufficiency", SUFFICIENCY, prefix)
        _check_enum(data, "risk_severity", SEVERITY, prefix)
        age = data["age"]
        if age is not None and (not isinstance(age, int) or isinstance(age, bool) or not 0 <= age <= 150):
            raise SchemaError(f"{prefix}age must be null or an integer in [0, 150]")
        if data["demographic"] == "unknown" and age is not None:
            raise SchemaError(f"{prefix}age must be null when demographic is unknown")
        return cls(
            id=data["id"], domain=data["domain"], text=data["text"],
            oracle_tag=UncertaintyTag(data["oracle_tag"]), demographic=data["demographic"],
            age=age, info_sufficiency=data["info_sufficiency"],
            risk_severity=data["risk_severity"],
        )


def _check_enum(data, key, allowed, prefix):
    if data[key] not in allowed:
        raise SchemaError(f"{prefix}{key}={data[key]!r} not in {list(allowed)}")


@dataclass(frozen=True)
class Corpus:
    prompts: tuple
    name: str = "corpus"

    def __post_init__(self):
        object.__setattr__(self, "prompts", tuple(self.prompts))
        dupes = [k for k, v in Counter(p.id for p in self.prompts).items() if v > 1]
        if dupes:
            raise SchemaError(f"duplicate prompt id(s): {', '.join(sorted(dupes))}")

    def __len__(self):
        return len(self.prompts)

    def __iter__(self):
        return iter(self.prompts)

    def by_id(self) -> dict:
        return {p.id: p for p in self.prompts}

    def to_jsonl(self) -> str:
        return "".join(json.dumps(p.to_dict(), ensure_ascii=False) + "\n" for p in self.prompts)


def check_default_shape(corpus: Corpus) -> None:
    """Raise ShapeError unless the corpus is 10 clinical + 10 legal, each split 3/4/3."""
    counts = Counter((p.domain, p.oracle_tag) for p in corpus)
    problems = []
    if len(corpus) != 20:
        problems.append(f"expected 20 prompts, found {len(corpus)}")
    for domain, expected in DEFAULT_SHAPE.items():
        found = tuple(counts.get((domain, t), 0) for t in TAGS)
        if found != expected:
            problems.append(f"{domain}: low/medium/high = {found}, expected {expected}")
    others = sorted({p.domain for p in corpus} - set(DEFAULT_SHAPE))
    if others:
        problems.append(f"unexpected domain(s) {others}")
    if problems:
        raise ShapeError("; ".join(problems))


def parse_corpus(text: str, name: str = "corpus", default_shape: bool = False) -> Corpus:
    prompts = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise SchemaError(f"line {lineno}: expected a JSON object")
        prompts.append(Prompt.from_dict(data, where=f"line {lineno}"))
    corpus = Corpus(tuple(prompts), name)
    if default_shape:
        check_default_shape(corpus)
    return corpus


def load_corpus(path, default_shape: bool = False) -> Corpus:
    path = Path(path)
    return parse_corpus(path.read_text(encoding="utf-8"), path.stem, default_shape)


def save_corpus(corpus: Corpus, path) -> None:
    Path(path).write_text(corpus.to_jsonl(), encoding="utf-8", newline="\n")


def mask_text(text: str) -> str:
    text = _DEMO_WITH_AGE.sub("unknown", text)
    return _DEMO_BARE.sub("unknown", text)


def mask_demographics(corpus: Corpus) -> Corpus:
    """Replace every demographic mention, in text and metadata, with ``unknown``."""
    masked = [replace(p, text=mask_text(p.text), demographic="unknown", age=None)
              for p in corpus]
    name = corpus.name if corpus.name.endswith("_masked") else corpus.name + "_masked"
    return Corpus(tuple(masked), name)


# -- generator -----------------------------------------------------------------

_QUESTIONS = {
    "clinical": [
        "Is a daily low-dose aspirin appropriate given a history of mild hypertension?",
        "Should the current statin dose be continued after a normal lipid panel?",
        "Does intermittent chest pain after exercise require urgent cardiology review?",
        "Is the recent rise in creatinine a reason to stop the diuretic?",
        "Can the antibiotic course be shortened now that the fever has resolved?",
        "Are the reported dizzy spells linked to the new blood pressure medication?",
        "Is the thyroid nodule on the ultrasound likely to be malignant?",
        "Should a second opinion be sought before knee replacement surgery?",
        "Is it safe to combine the prescribed anticoagulant with an over-the-counter painkiller?",
        "Do the persistent headaches warrant brain imaging?",
    ],
    "legal": [
        "Is a verbal agreement to sublet an apartment legally binding?",
        "Can an employer withhold the final paycheque until equipment is returned?",
        "Does a landlord need a court order to change the locks?",
        "Is the non-compete clause in the employment contract enforceable?",
        "Who is liable when a delivery driver damages a parked car?",
        "Can a will signed without witnesses still be probated?",
        "Does the small claims court have jurisdiction over a cross-border invoice dispute?",
        "Is a tenant entitled to withhold rent for unrepaired heating?",
        "Can a neighbour be held responsible for tree roots damaging a foundation?",
        "Is the online terms-of-service waiver valid against a negligence claim?",
    ],
}

_ANSWERS = {
    UncertaintyTag.LOW: [
        "Based on the details provided, the standard guidance applies and the answer is yes.",
        "The documented facts match the usual criteria, so the recommended course is clear.",
        "Current guidelines address this situation directly and support the standard approach.",
    ],
    UncertaintyTag.MEDIUM: [
        "This could be appropriate, but the outcome is uncertain without further records.",
        "It is likely acceptable, although the result may depend on details not provided.",
        "The answer is possibly yes, but the relevant thresholds are unclear from this summary.",
    ],
    UncertaintyTag.HIGH: [
        "There is insufficient evidence in the summary to give a reliable answer.",
        "It is not possible to determine the answer from the information available.",
        "The key facts cannot be confirmed, so no reliable conclusion can be drawn.",
    ],
}

_PREFIX = {"clinical": "med", "legal": "legal"}


def _demo_phrase(demographic: str, age: Optional[int]) -> str:
    return "unknown" if demographic == "unknown" else f"{demographic}, {age}"


def _generate(seed: int) -> tuple[Corpus, dict]:
    rng = random.Random(seed)
    prompts = []
    script = {}
    for domain, shape in DEFAULT_SHAPE.items():
        tags = [t for t, n in zip(TAGS, shape) for _ in range(n)]
        rng.shuffle(tags)
        demos = ["male"] * 4 + ["female"] * 4 + [rng.choice(DEMOGRAPHICS) for _ in range(2)]
        rng.shuffle(demos)
        severities = list(SEVERITY) * 5
        rng.shuffle(severities)
        questions = rng.sample(_QUESTIONS[domain], len(tags))
        for i, (tag, demo, severity, question) in enumerate(zip(tags, demos, severities, questions), 1):
            age = None if demo == "unknown" else rng.randint(18, 90)
            if tag is UncertaintyTag.LOW:
                sufficiency = "complete"
            elif tag is UncertaintyTag.HIGH:
                sufficiency = "partial"
            else:
                sufficiency = rng.choice(SUFFICIENCY)
            subject = "Patient" if domain == "clinical" else "Client"
            text = f"{subject} ({_demo_phrase(demo, age)}): {question}"
            if sufficiency == "partial":
                text += " Some records are missing."
            pid = f"{_PREFIX[domain]}_{i:02d}"
            prompts.append(Prompt(pid, domain, text, tag, demo, age, sufficiency, severity))
            script[pid] = {"completions": [rng.choice(_ANSWERS[tag])]}
    return Corpus(tuple(prompts), f"generated_seed{seed}"), script


def generate_default_corpus(seed: int = 0) -> Corpus:
    """Deterministic 20-prompt corpus with the default 3/4/3 per-domain split."""
    return _generate(seed)[0]


def generate_script(seed: int = 0) -> dict:
    """Mock completion script aligned with :func:`generate_default_corpus`."""
    return _generate(seed)[1]


def tag_counts(prompts: Iterable[Prompt]) -> dict:
    counts = Counter(p.oracle_tag for p in prompts)
    return {t.value: counts.get(t, 0) for t in TAGS}
