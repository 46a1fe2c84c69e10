import json
import threading

import httpx
import pytest

from coevolve.gateway import (
    MalformedResponseError,
    RetryPolicy,
    SkillProfile,
    SolverConfig,
    SolverGateway,
    SolverTimeout,
    TransportError,
)
from coevolve.gateway.proposals import parse_remote_proposal
from coevolve.geometry import build_diagram
from coevolve.orchestrator.evolve import seed_record
from coevolve.rewards import parse_response, score
from test_geometry import RIGHT, spec

TRIANGLE = spec({"A": (0, 0), "B": (6, 0), "C": (2, 4)}, [("A", "B"), ("B", "C"), ("A", "C")])


@pytest.fixture
def sample():
    return seed_record("s1", build_diagram(RIGHT), seed=0)


def chat(content):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": content}}]})


def http_gateway(handler, **kw):
    cfg = SolverConfig(backend="http", base_url="http://solver.test/v1", model="m", api_key="k", **kw)
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return SolverGateway(cfg, client=client, sleep=lambda s: None)


def test_oracle_answers_ground_truth(sample):
    r = SolverGateway(SolverConfig(backend="oracle")).answer(sample)
    assert r.extracted == sample.ground_truth
    assert parse_response(r.raw).well_formed


def test_simulated_always_correct_at_p1(sample):
    gw = SolverGateway(SolverConfig(backend="simulated", skill=SkillProfile(p0=1.0)))
    assert all(score(gw.answer(sample, i).raw, sample.ground_truth).accuracy for i in range(20))


def test_simulated_wrong_is_g_plus_one(sample):
    gw = SolverGateway(SolverConfig(backend="simulated", skill=SkillProfile(p0=0.0)))
    r = gw.answer(sample, 0)
    assert float(r.extracted) == pytest.approx(sample.ground_truth_value + 1.0, abs=1e-5)


def test_simulated_reproducible(sample):
    cfg = SolverConfig(backend="simulated", seed=7, skill=SkillProfile(p0=0.5))
    runs = [[SolverGateway(cfg).answer(sample, i).extracted for i in range(32)] for _ in range(2)]
    assert runs[0] == runs[1]
    correct = sum(a == sample.ground_truth for a in runs[0])
    assert 0 < correct < 32


def test_skill_profile_clamps():
    assert SkillProfile(0.9, delta=0.2).probability(2, 0) == 1.0
    assert SkillProfile(0.1, slope=0.5).probability(0, 3) == 0.0
    assert SkillProfile(0.4, 0.05, 0.2).probability(1, 4) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        SkillProfile(1.5)


def test_config_validation_and_env(monkeypatch):
    with pytest.raises(ValueError):
        SolverConfig(temperature=-1)
    with pytest.raises(ValueError):
        SolverConfig(max_in_flight=0)
    with pytest.raises(ValueError):
        SolverConfig(backend="carrier-pigeon")
    monkeypatch.setenv("SOLVER_API_BASE", "http://x/v1")
    monkeypatch.setenv("SOLVER_MODEL", "remote")
    monkeypatch.setenv("SOLVER_API_KEY", "secret")
    cfg = SolverConfig.from_env(backend="http")
    assert (cfg.base_url, cfg.model, cfg.api_key) == ("http://x/v1", "remote", "secret")
    assert "secret" not in repr(cfg)
    assert cfg.temperature == 0.9 and cfg.retry == RetryPolicy(3, 1.0)


def test_http_request_shape(sample):
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return chat(f"<think>Step 1: measure</think><answer>{sample.ground_truth}</answer>")

    r = http_gateway(handler).answer(sample)
    assert seen["url"] == "http://solver.test/v1/chat/completions"
    assert seen["auth"] == "Bearer k"
    assert seen["body"]["temperature"] == 0.9 and seen["body"]["model"] == "m"
    assert sample.question in seen["body"]["messages"][-1]["content"]
    assert r.extracted == sample.ground_truth and r.backend == "http"


def test_http_retries_then_succeeds(sample):
    calls = []
    delays = []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(503)
        return chat("<think>x</think><answer>1</answer>")

    cfg = SolverConfig(backend="http", base_url="http://solver.test", retry=RetryPolicy(3, 1.0))
    gw = SolverGateway(cfg, client=httpx.Client(transport=httpx.MockTransport(handler)), sleep=delays.append)
    assert gw.answer(sample).extracted == "1"
    assert len(calls) == 3 and delays == [1.0, 2.0]


def test_http_gives_up_after_retries(sample):
    calls = []

    def handler(request):
        calls.append(1)
        raise httpx.ConnectError("refused", request=request)

    with pytest.raises(TransportError):
        http_gateway(handler).answer(sample)
    assert len(calls) == 3


def test_http_timeout_is_distinct(sample):
    def handler(request):
        raise httpx.ReadTimeout("slow", request=request)

    with pytest.raises(SolverTimeout):
        http_gateway(handler).answer(sample)


def test_http_client_error_not_retried(sample):
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401, text="bad key")

    with pytest.raises(TransportError):
        http_gateway(handler).answer(sample)
    assert len(calls) == 1


def test_http_malformed_payload(sample):
    with pytest.raises(MalformedResponseError):
        http_gateway(lambda r: httpx.Response(200, json={"nope": 1})).answer(sample)


def test_http_wrong_answer_is_not_an_error(sample):
    r = http_gateway(lambda req: chat("I think it is about five")).answer(sample)
    assert r.extracted is None


def test_in_flight_limit(sample):
    active, peak = [0], [0]
    lock = threading.Lock()

    def handler(request):
        with lock:
            active[0] += 1
            peak[0] = max(peak[0], active[0])
        threading.Event().wait(0.01)
        with lock:
            active[0] -= 1
        return chat("<think>x</think><answer>1</answer>")

    gw = http_gateway(handler, max_in_flight=2)
    threads = [threading.Thread(target=gw.answer, args=(sample, i)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert peak[0] <= 2


def test_transcripts_written(sample, tmp_path):
    path = tmp_path / "t.jsonl"
    gw = SolverGateway(SolverConfig(backend="oracle"), transcripts=path)
    gw.answer(sample)
    gw.propose_auxiliary(build_diagram(TRIANGLE))
    kinds = [json.loads(line)["kind"] for line in path.read_text().splitlines()]
    assert kinds == ["answer", "proposal"]


def test_oracle_proposes_altitude_once():
    d = build_diagram(TRIANGLE)
    p = SolverGateway(SolverConfig()).propose_auxiliary(d)
    assert len(p.commands) == 1
    cmd = p.commands[0]
    assert cmd.kind == "perpendicular-foot" and cmd.args == ("C", "A", "B") and cmd.new_label == "D"


def test_remote_duplicate_segment_dropped():
    d = build_diagram(TRIANGLE)
    reply = json.dumps({"thought": "join", "commands": [{"kind": "connect", "args": ["A", "B"]}]})
    p = http_gateway(lambda r: chat(reply)).propose_auxiliary(d, "find AB")
    assert p.commands == () and any("dropped" in line for line in p.report)


def test_remote_unparseable_proposal():
    d = build_diagram(TRIANGLE)
    p = http_gateway(lambda r: chat("draw a line somewhere nice")).propose_auxiliary(d, "q")
    assert p.commands == () and p.report
    cmds, _, report = parse_remote_proposal('{"commands": [{"args": ["A"]}]}')
    assert cmds == [] and report


def test_remote_valid_proposal_gets_auto_label():
    d = build_diagram(TRIANGLE)
    reply = 'Sure. {"thought": "altitude", "commands": [{"kind": "perpendicular-foot", "args": ["C", "A", "B"]}]}'
    p = http_gateway(lambda r: chat(reply)).propose_auxiliary(d, "q")
    assert len(p.commands) == 1 and p.commands[0].new_label == "D" and p.thought == "altitude"
