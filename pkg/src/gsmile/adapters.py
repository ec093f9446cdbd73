"""Black-box model adapters and the on-disk response cache.

Three adapter kinds are supported:

- ``http``: POST the rendered ``request_template`` (content-type
  application/json) to the endpoint; the response must be a JSON object with
  an ``output`` string field.
- ``subprocess``: run the command, write the prompt to stdin, read the
  response from stdout.
- ``mock``: a pure in-process keyword model used for testing; the output is
  ``base_response`` followed by the fragment of every keyword present in the
  prompt (case-folded token match, fragments appended in definition order).

In ``image_cloud`` mode the raw response text is parsed as a point cloud
(the ``n d`` header is optional for responses).  Responses can be memoized in
a JSON-lines cache keyed by a digest of (kind, target, mode, prompt); cache
failures raise CacheIOError, which callers treat as non-fatal.
"""

from __future__ import annotations

import hashlib
import json
import os
import shlex
import subprocess
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .embed import WeightedPointCloud, parse_point_cloud_text
from .errors import (
    AdapterTimeoutError,
    CacheIOError,
    ConfigError,
    GsmileError,
    MalformedResponseError,
    TransportError,
)

DEFAULT_REQUEST_TEMPLATE = '{"prompt": "{prompt}"}'
CACHE_DIR_ENV = "GSMILE_CACHE_DIR"
CACHE_FILE_NAME = "responses.jsonl"


@dataclass(frozen=True)
class MockModel:
    """Deterministic keyword model: pure, no I/O, identical output per prompt."""

    base_response: str
    keyword_responses: dict[str, str] = field(default_factory=dict)

    def respond(self, prompt: str) -> str:
        present = {t.lower() for t in prompt.split()}
        parts = [self.base_response]
        parts.extend(
            fragment
            for keyword, fragment in self.keyword_responses.items()
            if keyword.lower() in present
        )
        return " ".join(parts)

    def identity(self) -> str:
        payload = json.dumps(
            [self.base_response, self.keyword_responses], sort_keys=True
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ModelSpec:
    """How to reach a model and how to interpret its responses."""

    kind: str  # http | subprocess | mock
    endpoint_or_command: str = ""
    request_template: str = DEFAULT_REQUEST_TEMPLATE
    mode: str = "text"  # text | image_cloud
    timeout: float = 30.0
    max_concurrency: int = 1
    retries: int = 0
    mock: MockModel | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("http", "subprocess", "mock"):
            raise ConfigError(f"unknown adapter kind {self.kind!r}")
        if self.mode not in ("text", "image_cloud"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.kind == "mock" and self.mock is None:
            raise ConfigError("mock adapter needs a mock model definition")
        if self.kind in ("http", "subprocess") and not self.endpoint_or_command:
            raise ConfigError(f"{self.kind} adapter needs endpoint_or_command")
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be positive, got {self.timeout}")
        if self.max_concurrency < 1:
            raise ConfigError(f"max_concurrency must be >= 1, got {self.max_concurrency}")

    def target(self) -> str:
        """Stable identifier of the model behind this spec (cache keying)."""
        if self.kind == "mock":
            assert self.mock is not None
            return f"mock:{self.mock.identity()}"
        return self.endpoint_or_command


def render_template(template: str, prompt: str) -> str:
    """Substitute {prompt} with the JSON-escaped prompt (quotes not included)."""
    escaped = json.dumps(prompt)[1:-1]
    return template.replace("{prompt}", escaped)


def _fetch_http(spec: ModelSpec, prompt: str) -> str:
    body = render_template(spec.request_template, prompt).encode("utf-8")
    request = urllib.request.Request(
        spec.endpoint_or_command,
        data=body,
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    try:
        with urllib.request.urlopen(request, timeout=spec.timeout) as response:
            raw = response.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        raise TransportError(f"HTTP {exc.code} from {spec.endpoint_or_command}") from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, TimeoutError):
            raise AdapterTimeoutError(f"no answer within {spec.timeout}s") from exc
        raise TransportError(f"request failed: {exc.reason}") from exc
    except TimeoutError as exc:
        raise AdapterTimeoutError(f"no answer within {spec.timeout}s") from exc
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedResponseError("response body is not JSON") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("output"), str):
        raise MalformedResponseError('response JSON lacks a string "output" field')
    return payload["output"]


def _fetch_subprocess(spec: ModelSpec, prompt: str) -> str:
    args = shlex.split(spec.endpoint_or_command)
    try:
        result = subprocess.run(
            args,
            input=prompt,
            capture_output=True,
            text=True,
            timeout=spec.timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise AdapterTimeoutError(f"command exceeded {spec.timeout}s") from exc
    except OSError as exc:
        raise TransportError(f"could not run {args[0]!r}: {exc}") from exc
    if result.returncode != 0:
        detail = result.stderr.strip().splitlines()
        raise TransportError(
            f"command exited {result.returncode}: {detail[-1] if detail else 'no stderr'}"
        )
    return result.stdout


def fetch_raw(spec: ModelSpec, prompt: str) -> str:
    """Raw response text for a prompt, with at most ``spec.retries`` retries."""
    attempts = 1 + max(spec.retries, 0)
    last: GsmileError | None = None
    for _ in range(attempts):
        try:
            if spec.kind == "mock":
                assert spec.mock is not None
                return spec.mock.respond(prompt)
            if spec.kind == "http":
                return _fetch_http(spec, prompt)
            return _fetch_subprocess(spec, prompt)
        except (AdapterTimeoutError, TransportError) as exc:
            last = exc
    assert last is not None
    raise last


def parse_output(spec: ModelSpec, raw: str) -> str | WeightedPointCloud:
    """Turn raw response text into the mode's output value."""
    if spec.mode == "image_cloud":
        try:
            return parse_point_cloud_text(raw, require_header=False)
        except GsmileError as exc:
            raise MalformedResponseError(f"response is not a point cloud: {exc}") from exc
    return raw


def query(spec: ModelSpec, prompt: str) -> str | WeightedPointCloud:
    """Fetch and parse one model response (text or point cloud)."""
    return parse_output(spec, fetch_raw(spec, prompt))


def digest_key(spec: ModelSpec, prompt: str) -> str:
    """Cache key: hex digest over adapter kind, target, mode, and prompt."""
    payload = json.dumps([spec.kind, spec.target(), spec.mode, prompt])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only JSON-lines store of raw model responses.

    One record per line: ``{"key": ..., "output": ..., "timestamp": ...}``
    with an RFC 3339 timestamp.  Lookups return the last record written for a
    key, so rewrites win.  Each put appends its record with a single write,
    which keeps concurrent appends from interleaving.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)

    @classmethod
    def default(cls) -> "ResponseCache":
        """Cache under $GSMILE_CACHE_DIR, or ~/.cache/gsmile otherwise."""
        root = os.environ.get(CACHE_DIR_ENV)
        base = Path(root) if root else Path.home() / ".cache" / "gsmile"
        return cls(base / CACHE_FILE_NAME)

    def get(self, key: str) -> str | None:
        try:
            if not self.path.exists():
                return None
            text = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise CacheIOError(f"cannot read cache {self.path}: {exc}") from exc
        found: str | None = None
        for line in text.splitlines():
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                continue  # torn or foreign line; skip rather than fail the run
            if record.get("key") == key and isinstance(record.get("output"), str):
                found = record["output"]
        return found

    def put(self, key: str, output: str) -> None:
        record = {
            "key": key,
            "output": output,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        line = json.dumps(record) + "\n"
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(line)
        except OSError as exc:
            raise CacheIOError(f"cannot write cache {self.path}: {exc}") from exc
