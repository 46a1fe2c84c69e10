from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable

import httpx

from ..canonical import format_canonical
from ..geometry.build import build_diagram
from ..geometry.describe import emit_formal_description
from ..geometry.diagram import Diagram
from ..geometry.measure import MeasurementQuery, measure
from ..records import SampleRecord
from ..rewards import extract_answer, format_response, parse_response
from .config import MalformedResponseError, SolverConfig, SolverError, SolverTimeout, TransportError
from .proposals import Proposal, parse_remote_proposal, rule_based_proposal, validate_commands

ANSWER_SYSTEM_PROMPT = (
    "You solve plane geometry problems. Reason step by step, numbering steps as 'Step 1:', 'Step 2:', ... "
    "Reply exactly as <think>your steps</think><answer>a single number</answer>. Give angles in degrees."
)

PROPOSAL_SYSTEM_PROMPT = (
    "Decide whether auxiliary constructions would help solve the question. Reply with one JSON object "
    '{"thought": "...", "commands": [{"kind": ..., "args": [...], "new": ...}]}. '
    "Allowed kinds: connect [A,B]; perpendicular-foot [P,A,B] (foot of P on AB); parallel-through [P,A,B]; "
    "midpoint [A,B,P] (midpoint of AB joined to P); extend-to-intersection [A,B,C,D]. "
    '"new" names the created point. Use an empty list when nothing is needed.'
)


@dataclass(frozen=True)
class SolverResponse:
    raw: str
    extracted: str | None
    latency: float
    backend: str
    attempt: int
    sample_id: str = ""


def _oracle_value(sample: SampleRecord) -> float:
    if sample.target:
        return measure(build_diagram(sample.diagram), MeasurementQuery.from_dict(sample.target))
    return float(sample.ground_truth_value)


def _think(sample: SampleRecord) -> str:
    return sample.reasoning or "Step 1: Evaluate the requested quantity from the figure."


class SolverGateway:
    """Uniform access to oracle, simulated and chat-completions solvers.

    Shareable across threads; at most ``cfg.max_in_flight`` calls run at once.
    """

    def __init__(
        self,
        cfg: SolverConfig,
        *,
        client: httpx.Client | None = None,
        transcripts: str | Path | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.cfg = cfg
        self._slots = threading.BoundedSemaphore(cfg.max_in_flight)
        self._client = client
        self._own_client = False
        self._sleep = sleep
        self._transcripts = Path(transcripts) if transcripts else None
        self._log_lock = threading.Lock()

    @property
    def tag(self) -> str:
        return self.cfg.tag

    # -- transport -------------------------------------------------------------------

    def _http(self) -> httpx.Client:
        if self._client is None:
            self._client = httpx.Client(timeout=self.cfg.timeout)
            self._own_client = True
        return self._client

    def close(self) -> None:
        if self._own_client and self._client is not None:
            self._client.close()
            self._client = None

    def __enter__(self) -> "SolverGateway":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _log(self, kind: str, payload: dict[str, Any]) -> None:
        if self._transcripts is None:
            return
        line = json.dumps({"kind": kind, **payload}, ensure_ascii=False)
        with self._log_lock:
            self._transcripts.parent.mkdir(parents=True, exist_ok=True)
            with open(self._transcripts, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def complete(self, messages: list[dict[str, str]]) -> str:
        """One chat-completions call with retries on transport failures."""
        if not self.cfg.base_url:
            raise TransportError("http backend needs a base URL (SOLVER_API_BASE)")
        url = self.cfg.base_url.rstrip("/") + "/chat/completions"
        headers = {"Authorization": f"Bearer {self.cfg.api_key}"} if self.cfg.api_key else {}
        body = {"model": self.cfg.model, "messages": messages, "temperature": self.cfg.temperature}
        policy = self.cfg.retry
        last: SolverError | None = None
        for attempt in range(1, policy.max_attempts + 1):
            if attempt > 1:
                self._sleep(policy.delay(attempt - 1))
            try:
                with self._slots:
                    resp = self._http().post(url, json=body, headers=headers, timeout=self.cfg.timeout)
            except httpx.TimeoutException as exc:
                last = SolverTimeout(f"timeout: {exc}")
                continue
            except httpx.TransportError as exc:
                last = TransportError(f"transport failure: {exc}")
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                content = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise MalformedResponseError(f"unexpected payload: {exc!r}") from None
            if not isinstance(content, str):
                raise MalformedResponseError("message content is not text")
            return content
        raise last  # type: ignore[misc]

    # -- answering -------------------------------------------------------------------

    def answer(self, sample: SampleRecord, attempt: int = 0) -> SolverResponse:
        start = time.perf_counter()
        backend = self.cfg.backend
        if backend == "oracle":
            with self._slots:
                raw = format_response(_think(sample), format_canonical(_oracle_value(sample)))
        elif backend == "simulated":
            with self._slots:
                raw = self._simulate(sample, attempt)
        else:
            description = emit_formal_description(build_diagram(sample.diagram), sample.id).to_text()
            raw = self.complete(
                [
                    {"role": "system", "content": ANSWER_SYSTEM_PROMPT},
                    {"role": "user", "content": f"Figure facts:\n{description}\n\nQuestion: {sample.question}"},
                ]
            )
        parsed = parse_response(raw)
        extracted = parsed.value if parsed.well_formed else extract_answer(raw)
        response = SolverResponse(raw, extracted, time.perf_counter() - start, backend, attempt, sample.id)
        self._log("answer", {**asdict(response), "latency": round(response.latency, 6)})
        return response

    def simulated_correct(self, sample: SampleRecord, attempt: int) -> bool:
        """The seeded coin flip behind a simulated answer; depends only on (seed, id, attempt)."""
        rng = random.Random(f"{self.cfg.seed}|{sample.id}|{attempt}")
        return rng.random() < self.cfg.skill.probability(self.cfg.iteration, sample.difficulty)

    def _simulate(self, sample: SampleRecord, attempt: int) -> str:
        value = float(sample.ground_truth_value)
        if not self.simulated_correct(sample, attempt):
            value += 1.0
        return format_response(_think(sample), format_canonical(value))

    # -- proposals -------------------------------------------------------------------

    def propose_auxiliary(self, d: Diagram, question: str = "") -> Proposal:
        if self.cfg.backend in ("oracle", "simulated"):
            commands, thought = rule_based_proposal(d)
            report: list[str] = []
        else:
            text = self.complete(
                [
                    {"role": "system", "content": PROPOSAL_SYSTEM_PROMPT},
                    {
                        "role": "user",
                        "content": f"Figure facts:\n{emit_formal_description(d).to_text()}\n\nQuestion: {question}",
                    },
                ]
            )
            commands, thought, report = parse_remote_proposal(text)
        kept, dropped = validate_commands(d, commands)
        proposal = Proposal(tuple(kept), thought, tuple(report + dropped))
        self._log(
            "proposal",
            {"thought": thought, "commands": [c.to_dict() for c in kept], "report": list(proposal.report)},
        )
        return proposal


def answer(sample: SampleRecord, cfg: SolverConfig, attempt: int = 0) -> SolverResponse:
    with SolverGateway(cfg) as gw:
        return gw.answer(sample, attempt)


def propose_auxiliary(d: Diagram, question: str, cfg: SolverConfig) -> Proposal:
    with SolverGateway(cfg) as gw:
        return gw.propose_auxiliary(d, question)
