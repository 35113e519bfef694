import json
import logging
import random

import httpx
import pytest
from hypothesis import given, strategies as st

from rot_harness.backend import (
    BackendKind,
    GenerationRequest,
    RemoteBackend,
    ScriptedBackend,
    request_hash,
)
from rot_harness.errors import ConfigError, EndpointError, FixtureMiss

REQ = GenerationRequest(messages=(("system", "s"), ("user", "u")), model_id="m", request_id="r1")


def test_hash_is_pinned():
    # frozen: changing the canonical form would orphan every fixture store
    assert request_hash([("user", "hi")], "m") == request_hash((("user", "hi"),), "m")
    assert request_hash([("user", "hi")], "m") != request_hash([("user", "hi")], "m2")
    assert request_hash([("user", "hi")], "m") != request_hash([("user", "hi ")], "m")
    assert len(request_hash([], "m")) == 64


@given(st.lists(st.tuples(st.sampled_from(["system", "user", "assistant"]), st.text()), max_size=4), st.text())
def test_hash_is_deterministic(msgs, model):
    assert request_hash(msgs, model) == request_hash(list(msgs), model)


def test_scripted_replay(tmp_path):
    store = tmp_path / "fx.jsonl"
    key = request_hash(REQ.messages, REQ.model_id)
    # key order in the store file does not matter
    store.write_text(json.dumps({"text": "Row 1: x\nFinal Answer: 7", "note": None, "model": "m", "hash": key}) + "\n")
    b = ScriptedBackend(store)
    res = b.generate(REQ)
    assert res.text.endswith("7") and res.backend is BackendKind.SCRIPTED
    assert res.completion_tokens == 6 and res.approximate_tokens


def test_scripted_miss_names_hash():
    b = ScriptedBackend(entries={})
    with pytest.raises(FixtureMiss) as info:
        b.generate(REQ)
    assert request_hash(REQ.messages, REQ.model_id) in str(info.value)
    assert isinstance(info.value, KeyError)


def test_record_then_generate(tmp_path):
    store = tmp_path / "fx.jsonl"
    b = ScriptedBackend(store)
    b.record_fixture(REQ, "Final Answer: a", note="demo")
    assert ScriptedBackend(store).generate(REQ).text == "Final Answer: a"


def test_last_write_wins(tmp_path, caplog):
    store = tmp_path / "fx.jsonl"
    b = ScriptedBackend(store)
    b.record_fixture(REQ, "one")
    with caplog.at_level(logging.WARNING):
        b.record_fixture(REQ, "two")
        reloaded = ScriptedBackend(store)
    assert b.generate(REQ).text == "two" == reloaded.generate(REQ).text
    assert sum("last" in r.getMessage() for r in caplog.records) == 2


# -- remote -------------------------------------------------------------------

OK = {
    "choices": [{"message": {"role": "assistant", "content": "Row 1: a\nFinal Answer: a"}}],
    "usage": {"prompt_tokens": 11, "completion_tokens": 9},
}


def _remote(handler, **kw):
    sleeps = []
    b = RemoteBackend(
        endpoint="http://test.invalid",
        api_key="k",
        transport=httpx.MockTransport(handler),
        sleep=sleeps.append,
        rng=random.Random(0),
        **kw,
    )
    return b, sleeps


def test_remote_success_uses_usage():
    seen = []

    def handler(req):
        seen.append(req)
        return httpx.Response(200, json=OK)

    b, sleeps = _remote(handler)
    res = b.generate(REQ)
    assert res.text.endswith("a") and res.completion_tokens == 9 and res.prompt_tokens == 11
    assert not res.approximate_tokens and res.backend is BackendKind.REMOTE
    assert seen[0].url == "http://test.invalid/v1/chat/completions"
    assert seen[0].headers["authorization"] == "Bearer k"
    body = json.loads(seen[0].content)
    assert body["messages"][1] == {"role": "user", "content": "u"} and body["temperature"] == 0.0
    assert sleeps == []


def test_remote_token_fallback():
    b, _ = _remote(lambda req: httpx.Response(200, json={"choices": OK["choices"]}))
    res = b.generate(REQ)
    assert res.completion_tokens == 6 and res.approximate_tokens


@pytest.mark.parametrize("status", [429, 500, 503])
def test_remote_retries_transient(status):
    calls = []

    def handler(req):
        calls.append(1)
        return httpx.Response(status) if len(calls) < 3 else httpx.Response(200, json=OK)

    b, sleeps = _remote(handler)
    assert b.generate(REQ).completion_tokens == 9
    assert len(calls) == 3 and len(sleeps) == 2
    assert 0 <= sleeps[0] <= 1.0 and 0 <= sleeps[1] <= 2.0


def test_remote_gives_up_after_five():
    calls = []

    def handler(req):
        calls.append(1)
        return httpx.Response(503)

    b, sleeps = _remote(handler)
    with pytest.raises(EndpointError, match="5 attempts"):
        b.generate(REQ)
    assert len(calls) == 5 and len(sleeps) == 4
    assert all(0 <= s <= 2**i for i, s in enumerate(sleeps))


def test_remote_no_retry_on_client_error():
    calls = []

    def handler(req):
        calls.append(1)
        return httpx.Response(401, text="bad key")

    b, _ = _remote(handler)
    with pytest.raises(EndpointError, match="401"):
        b.generate(REQ)
    assert len(calls) == 1


def test_remote_unreachable_host():
    def handler(req):
        raise httpx.ConnectError("connection refused", request=req)

    b, sleeps = _remote(handler)
    with pytest.raises(EndpointError):
        b.generate(REQ)
    assert len(sleeps) == 4


def test_remote_timeout_retried():
    calls = []

    def handler(req):
        calls.append(1)
        if len(calls) == 1:
            raise httpx.ReadTimeout("slow", request=req)
        return httpx.Response(200, json=OK)

    b, _ = _remote(handler)
    assert b.generate(REQ).text
    assert len(calls) == 2


def test_remote_dedupes_request_id():
    calls = []

    def handler(req):
        calls.append(1)
        return httpx.Response(200, json=OK)

    b, _ = _remote(handler)
    first = b.generate(REQ)
    assert b.generate(REQ) is first and len(calls) == 1
    b.generate(GenerationRequest(REQ.messages, REQ.model_id, request_id="r2"))
    assert len(calls) == 2


def test_remote_malformed_payload():
    b, _ = _remote(lambda req: httpx.Response(200, json={"choices": []}))
    with pytest.raises(EndpointError):
        b.generate(REQ)


def test_remote_config(monkeypatch):
    with pytest.raises(ConfigError):
        RemoteBackend(endpoint="http://x", api_key="")
    monkeypatch.delenv("ROT_API_KEY", raising=False)
    with pytest.raises(ConfigError):
        RemoteBackend.from_env(endpoint="http://x")
    monkeypatch.setenv("ROT_API_KEY", "k")
    monkeypatch.setenv("ROT_ENDPOINT", "http://h/v1/")
    assert RemoteBackend.from_env().url == "http://h/v1/chat/completions"


def test_request_validation():
    with pytest.raises(ValueError):
        GenerationRequest(messages=(), model_id="m", max_tokens=0)
