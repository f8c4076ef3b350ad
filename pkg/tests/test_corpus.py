import json
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from moralgate.corpus import (Corpus, Prompt, SchemaError, ShapeError, generate_default_corpus,
                              generate_script, load_corpus, mask_demographics, mask_text,
                              parse_corpus, save_corpus, tag_counts)
from moralgate.rulebase import UncertaintyTag
from moralgate.tagger import tag


def test_default_corpus_shape(default_corpus):
    assert len(default_corpus) == 20
    assert tag_counts(default_corpus) == {"low": 6, "medium": 8, "high": 6}
    for domain in ("clinical", "legal"):
        sub = [p for p in default_corpus if p.domain == domain]
        assert tag_counts(sub) == {"low": 3, "medium": 4, "high": 3}


def test_error_ids_have_expected_oracle_tags(default_corpus):
    by_id = default_corpus.by_id()
    assert by_id["med_03"].oracle_tag is UncertaintyTag.LOW
    assert by_id["med_06"].oracle_tag is UncertaintyTag.MEDIUM
    assert by_id["legal_08"].oracle_tag is UncertaintyTag.MEDIUM


def test_nineteen_prompts_fail_shape(default_corpus):
    text = Corpus(default_corpus.prompts[:19]).to_jsonl()
    with pytest.raises(ShapeError):
        parse_corpus(text, default_shape=True)
    assert len(parse_corpus(text)) == 19


def _record(**over):
    base = {"id": "p1", "domain": "clinical", "text": "Patient (female, 70): chest pain.",
            "oracle_tag": "high", "demographic": "female", "age": 70,
            "info_sufficiency": "partial", "risk_severity": "high"}
    base.update(over)
    return json.dumps(base)


def test_female_70_accepted():
    p = parse_corpus(_record()).prompts[0]
    assert (p.demographic, p.age) == ("female", 70)


@pytest.mark.parametrize("over,message", [
    ({"domain": "finance"}, "domain"),
    ({"oracle_tag": "extreme"}, "oracle_tag"),
    ({"demographic": "unknown"}, "age must be null"),
    ({"age": "70"}, "age"),
    ({"text": ""}, "text"),
    ({"bogus": 1}, "unknown field"),
])
def test_schema_errors(over, message):
    with pytest.raises(SchemaError, match=message):
        parse_corpus(_record(**over))


def test_missing_field_and_bad_json():
    with pytest.raises(SchemaError, match="missing field"):
        parse_corpus('{"id": "x"}')
    with pytest.raises(SchemaError, match="line 2"):
        parse_corpus(_record() + "\n{not json")


def test_duplicate_ids():
    with pytest.raises(SchemaError, match="duplicate"):
        parse_corpus(_record() + "\n" + _record())


def test_mask_text_examples():
    assert mask_text("female, 70, chest pain …") == "unknown, chest pain …"
    assert mask_text("Patient (male,45): a male patient") == "Patient (unknown): a unknown patient"
    assert mask_text("unknown, nothing to do") == "unknown, nothing to do"


def test_mask_demographics(default_corpus):
    masked = mask_demographics(default_corpus)
    assert masked.name == default_corpus.name + "_masked"
    for before, after in zip(default_corpus, masked):
        assert (after.id, after.domain, after.oracle_tag) == (before.id, before.domain, before.oracle_tag)
        assert after.demographic == "unknown" and after.age is None
        assert "male" not in after.text.lower().replace("unknown", "")
    assert mask_demographics(masked) == masked


def test_mask_leaves_unknown_prompt_alone():
    p = Prompt("x", "legal", "Client (unknown): question?", UncertaintyTag.LOW)
    assert mask_demographics(Corpus((p,), "c_masked")).prompts == (p,)


def test_save_load_round_trip(default_corpus, tmp_path):
    path = tmp_path / "c.jsonl"
    save_corpus(default_corpus, path)
    again = load_corpus(path, default_shape=True)
    assert again.prompts == default_corpus.prompts
    assert path.read_bytes() == default_corpus.to_jsonl().encode()


def test_field_order_is_fixed(default_corpus):
    first = default_corpus.to_jsonl().splitlines()[0]
    assert list(json.loads(first)) == ["id", "domain", "text", "oracle_tag", "demographic", "age",
                                       "info_sufficiency", "risk_severity"]


def test_generator_seed0():
    c = generate_default_corpus(0)
    parse_corpus(c.to_jsonl(), default_shape=True)
    assert c.to_jsonl() == generate_default_corpus(0).to_jsonl()


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_generator_invariants(seed):
    c = generate_default_corpus(seed)
    parse_corpus(c.to_jsonl(), default_shape=True)
    for domain in ("clinical", "legal"):
        demos = Counter(p.demographic for p in c if p.domain == domain)
        assert demos["male"] >= 4 and demos["female"] >= 4
    assert {p.info_sufficiency for p in c} == {"complete", "partial"}
    assert {p.risk_severity for p in c} == {"low", "high"}
    # the masked generator output stays a fixed point
    assert mask_demographics(mask_demographics(c)) == mask_demographics(c)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_generated_script_matches_oracle(seed):
    c, script = generate_default_corpus(seed), generate_script(seed)
    assert set(script) == {p.id for p in c}
    for p in c:
        assert tag(script[p.id]["completions"]).tag is p.oracle_tag
