import io
import json
import urllib.error

import pytest

from moralgate.corpus import SchemaError
from moralgate.provider import (GenerationRequest, GenerationResult, HTTPChatProvider,
                                ProviderError, ScriptedProvider, mock_from_script,
                                parse_chat_response)


def test_scripted_echo():
    mock = ScriptedProvider({"p1": {"completions": ["A"]}})
    assert mock.generate(GenerationRequest("ignored", prompt_id="p1")).completions == ("A",)


def test_five_variants_in_order():
    variants = [f"v{i}" for i in range(5)]
    mock = ScriptedProvider({"p": {"completions": variants}})
    assert mock.generate(GenerationRequest("x", k=5, prompt_id="p")).completions == tuple(variants)


def test_strict_unscripted_prompt_fails():
    with pytest.raises(ProviderError):
        ScriptedProvider({}).generate(GenerationRequest("x", prompt_id="nope"))


def test_strict_rejects_too_many_completions():
    mock = ScriptedProvider({"p": {"completions": ["a"]}})
    with pytest.raises(ProviderError):
        mock.generate(GenerationRequest("x", k=2, prompt_id="p"))


def test_lenient_mode_cycles_and_falls_back():
    mock = ScriptedProvider({"p": {"completions": ["a", "b"]}}, strict=False, fallback="?")
    assert mock.generate(GenerationRequest("x", k=3, prompt_id="p")).completions == ("a", "b", "a")
    assert mock.generate(GenerationRequest("x", k=2, prompt_id="q")).completions == ("?", "?")


def test_lookup_falls_back_to_prompt_text():
    mock = ScriptedProvider({"What now?": {"completions": ["this"]}})
    assert mock.generate(GenerationRequest("What now?")).completions == ("this",)


def test_logprobs_pass_through(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"p": {"completions": ["a b"], "logprobs": [[-0.1, -0.2]]}}))
    result = mock_from_script(path).generate(GenerationRequest("x", prompt_id="p"))
    assert result.token_logprobs == ((-0.1, -0.2),)


def test_two_loads_behave_identically(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"p": {"completions": ["a", "b"]}}))
    req = GenerationRequest("x", k=2, prompt_id="p")
    assert mock_from_script(path).generate(req) == mock_from_script(path).generate(req)


@pytest.mark.parametrize("script", [
    [],
    {"p": "text"},
    {"p": {"completions": []}},
    {"p": {"completions": ["a"], "logprobs": [[-1], [-2]]}},
    {"p": {"completions": ["a"], "extra": 1}},
])
def test_malformed_script(tmp_path, script):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(script))
    with pytest.raises(SchemaError):
        mock_from_script(path)


def test_default_script_covers_default_corpus(default_provider, default_corpus):
    for p in default_corpus:
        assert len(default_provider.generate(GenerationRequest(p.text, prompt_id=p.id)).completions) == 1


@pytest.mark.parametrize("kwargs", [{"k": 0}, {"temperature": 2.5}])
def test_request_validation(kwargs):
    with pytest.raises(ValueError):
        GenerationRequest("x", **kwargs)


def test_result_logprob_alignment():
    with pytest.raises(ValueError):
        GenerationResult(("a", "b"), ((-1.0,),))


# -- HTTP adapter, exercised with a fake opener (no network) --------------------------

class _Resp(io.BytesIO):
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _payload(texts, with_logprobs=True):
    choices = []
    for t in texts:
        c = {"message": {"content": t}}
        if with_logprobs:
            c["logprobs"] = {"content": [{"logprob": -0.5}, {"logprob": -1.5}]}
        choices.append(c)
    return {"choices": choices}


def test_http_provider_request_and_parse():
    seen = {}

    def opener(req, timeout):
        seen["url"] = req.full_url
        seen["body"] = json.loads(req.data)
        seen["auth"] = req.get_header("Authorization")
        return _Resp(json.dumps(_payload(["one", "two"])).encode())

    p = HTTPChatProvider("http://llm.local/v1/", "m", api_key="k", opener=opener)
    result = p.generate(GenerationRequest("hi", k=2, temperature=0.7))
    assert seen["url"] == "http://llm.local/v1/chat/completions"
    assert seen["body"]["n"] == 2 and seen["body"]["temperature"] == 0.7
    assert seen["auth"] == "Bearer k"
    assert result.completions == ("one", "two")
    assert result.token_logprobs == ((-0.5, -1.5), (-0.5, -1.5))


def test_http_provider_unreachable():
    def opener(req, timeout):
        raise urllib.error.URLError("refused")

    with pytest.raises(ProviderError):
        HTTPChatProvider("http://x", "m", opener=opener).generate(GenerationRequest("hi"))


def test_http_provider_needs_configuration(monkeypatch):
    monkeypatch.delenv("MORALGATE_BASE_URL", raising=False)
    monkeypatch.delenv("MORALGATE_MODEL", raising=False)
    with pytest.raises(ProviderError):
        HTTPChatProvider()


@pytest.mark.parametrize("payload", [{}, {"choices": [{"text": "x"}]}, _payload(["a", "b"])])
def test_malformed_chat_reply(payload):
    with pytest.raises(ProviderError):
        parse_chat_response(payload, k=1)


def test_chat_reply_without_logprobs():
    assert parse_chat_response(_payload(["a"], with_logprobs=False), k=1).token_logprobs is None
