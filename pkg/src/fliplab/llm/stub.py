"""Local OpenAI-compatible stub server for exercising the remote pathway.

A FastAPI app serving /v1/completions and /v1/chat/completions, backed by any
local provider (a generator-model mock or the Bayesian reference provider).
Requests are validated strictly, responses are deterministic given the stub
seed, and the app tracks concurrency and can inject failures, which is how
the client's rate limiting, caching, and backoff are verified end to end.

Run standalone with, e.g.:

    uvicorn --factory fliplab.llm.stub:default_app
"""

from __future__ import annotations

import asyncio
import math
import threading
import time
from collections import deque
from typing import List, Optional

import uvicorn
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..models import Bernoulli, SeededRng
from .config import request_digest
from .providers import Provider, MockFlipProvider

__all__ = ["create_stub_app", "default_app", "StubServer"]

LOGPROB_FLOOR = -100.0  # stand-in for zero probability; JSON has no -inf


class CompletionsRequest(BaseModel):
    model: str
    prompt: str
    max_tokens: int = Field(ge=1)
    temperature: float = Field(ge=0.0)
    logprobs: Optional[int] = None
    n: int = Field(default=1, ge=1)


class ChatMessage(BaseModel):
    role: str
    content: str


class ChatRequest(BaseModel):
    model: str
    messages: List[ChatMessage]
    max_tokens: int = Field(ge=1)
    temperature: float = Field(ge=0.0)
    logprobs: bool = False
    top_logprobs: Optional[int] = None
    n: int = Field(default=1, ge=1)


def _clamp(logprob: float) -> float:
    return LOGPROB_FLOOR if math.isinf(logprob) else max(LOGPROB_FLOOR, logprob)


def create_stub_app(
    behavior: Provider,
    *,
    seed: int = 0,
    latency: float = 0.0,
    failures: Optional[List[int]] = None,
) -> FastAPI:
    """Build the stub app around a local provider.

    `failures` is a queue of HTTP status codes served (in order) instead of
    real answers, for retry/backoff tests.  `latency` delays every handler so
    concurrent requests overlap and the in-flight gauge means something.
    """
    app = FastAPI(title="fliplab stub")
    state = app.state
    state.behavior = behavior
    state.seed = seed
    state.latency = latency
    state.failures = deque(failures or [])
    state.requests = 0
    state.in_flight = 0
    state.max_in_flight = 0
    state.request_log = []

    async def _enter(path: str, body: dict) -> Optional[JSONResponse]:
        state.requests += 1
        state.in_flight += 1
        state.max_in_flight = max(state.max_in_flight, state.in_flight)
        state.request_log.append({"path": path, "body": body})
        if state.latency:
            await asyncio.sleep(state.latency)
        if state.failures:
            status = state.failures.popleft()
            return JSONResponse(
                status_code=status,
                content={"error": {"message": f"injected failure {status}"}},
            )
        return None

    def _exit() -> None:
        state.in_flight -= 1

    def _choice_seed(body: dict, index: int) -> int:
        return SeededRng.derive(state.seed, request_digest(body), index)

    def _first_token(behavior_prompt, text: str) -> tuple:
        """First-token spelling and alternatives, with leading-space variants."""
        alts = state.behavior.alternatives(behavior_prompt)
        spoken = {" " + token.strip(): _clamp(lp) for token, lp in alts.items()}
        word = text.strip().split()[0].strip("[](){}\"'`.,;:!?") if text.strip() else ""
        token = " " + word
        if token not in spoken:
            token = max(spoken, key=spoken.get) if spoken else " "
        return token, spoken

    @app.post("/v1/completions")
    async def completions(req: CompletionsRequest):
        body = req.model_dump()
        failure = await _enter("/v1/completions", body)
        try:
            if failure is not None:
                return failure
            choices = []
            for i in range(req.n):
                record = state.behavior.complete(
                    req.prompt, 1, max_tokens=req.max_tokens, seed=_choice_seed(body, i)
                )[0]
                logprobs = None
                if req.logprobs:
                    token, top = _first_token(req.prompt, record.response_text)
                    logprobs = {
                        "tokens": [token],
                        "token_logprobs": [top.get(token, LOGPROB_FLOOR)],
                        "top_logprobs": [top],
                        "text_offset": [len(req.prompt)],
                    }
                choices.append(
                    {
                        "text": record.response_text,
                        "index": i,
                        "logprobs": logprobs,
                        "finish_reason": "length",
                    }
                )
            return {
                "id": f"cmpl-{request_digest(body)[:12]}",
                "object": "text_completion",
                "created": 0,
                "model": req.model,
                "choices": choices,
                "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
            }
        finally:
            _exit()

    @app.post("/v1/chat/completions")
    async def chat_completions(req: ChatRequest):
        body = req.model_dump()
        failure = await _enter("/v1/chat/completions", body)
        try:
            if failure is not None:
                return failure
            messages = [m.model_dump() for m in req.messages]
            choices = []
            for i in range(req.n):
                record = state.behavior.complete(
                    messages, 1, max_tokens=req.max_tokens, seed=_choice_seed(body, i)
                )[0]
                logprobs = None
                if req.logprobs:
                    token, top = _first_token(messages, record.response_text)
                    logprobs = {
                        "content": [
                            {
                                "token": token,
                                "logprob": top.get(token, LOGPROB_FLOOR),
                                "top_logprobs": [
                                    {"token": t, "logprob": lp} for t, lp in top.items()
                                ],
                            }
                        ]
                    }
                choices.append(
                    {
                        "index": i,
                        "message": {"role": "assistant", "content": record.response_text},
                        "logprobs": logprobs,
                        "finish_reason": "stop",
                    }
                )
            return {
                "id": f"chatcmpl-{request_digest(body)[:12]}",
                "object": "chat.completion",
                "created": 0,
                "model": req.model,
                "choices": choices,
                "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
            }
        finally:
            _exit()

    @app.get("/stub/stats")
    async def stats():
        return {
            "requests": state.requests,
            "max_in_flight": state.max_in_flight,
            "pending_failures": len(state.failures),
        }

    return app


def default_app() -> FastAPI:
    """Factory for manual runs: a fair-coin mock behind the stub."""
    return create_stub_app(MockFlipProvider(Bernoulli(p=0.5)))


class StubServer:
    """Run a stub app on a real localhost socket in a background thread."""

    def __init__(self, app: FastAPI, host: str = "127.0.0.1"):
        self._config = uvicorn.Config(app, host=host, port=0, log_level="warning")
        self.server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self.server.run, daemon=True)
        self.url = ""

    def __enter__(self) -> "StubServer":
        self._thread.start()
        deadline = time.monotonic() + 10.0
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("stub server did not start within 10s")
            time.sleep(0.01)
        sock = self.server.servers[0].sockets[0]
        host, port = sock.getsockname()[:2]
        self.url = f"http://{host}:{port}"
        return self

    def __exit__(self, *exc) -> None:
        self.server.should_exit = True
        self._thread.join(timeout=10.0)
