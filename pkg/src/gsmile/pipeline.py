"""End-to-end attribution runs against a black-box model.

The flow for one run:

1. tokenize the prompt and draw inclusion masks (mask 0 is all-ones);
2. query the model once per masked prompt, through the response cache when
   one is given;
3. score each record: input-side distance delta (word mover's distance
   between original and masked prompt), output-side distance Delta (word
   mover's distance of the outputs in text mode, transport distance of the
   point clouds in image_cloud mode), and a bootstrap p-value comparing the
   two outputs' embedded samples;
4. drop records whose p-value exceeds alpha (the baseline always stays),
   pick the kernel bandwidth (configured sigma or the median heuristic over
   the kept distances), and weight each record;
5. fit the locally weighted surrogate on the kept records and summarize fit
   fidelity;
6. report signed coefficients plus min-max normalized absolute scores.

``explain`` returns the full result; ``evaluate``, ``stability_probe`` and
``consistency_probe`` wrap it with the corresponding metric.  Results
serialize to a versioned JSON report that round-trips losslessly, and render
to HTML or ANSI token heatmaps.
"""

from __future__ import annotations

import html as html_mod
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import adapters
from .adapters import ModelSpec, MockModel, ResponseCache, digest_key
from .embed import (
    EmbeddingTable,
    WeightedPointCloud,
    embed_tokens,
    load_embedding_table,
)
from .errors import (
    AllTokensOOVError,
    CacheIOError,
    CacheUnavailableWarning,
    ConfigError,
    DegenerateFidelityWarning,
    DroppedRecordsWarning,
    InsufficientRecordsWarning,
    LengthMismatchError,
)
from .metrics import (
    FidelityReport,
    att_acc,
    att_auroc,
    att_f1,
    consistency_stats,
    fidelity_report,
    jaccard_topk,
    minmax_normalize,
)
from .perturb import MaskStrategy, apply_mask, mask_to_features, sample_masks, tokenize
from .significance import bootstrap_pvalue, filter_significant
from .surrogate import (
    SurrogateModel,
    fit_bayesian_ridge,
    fit_weighted_linear,
    predict,
)
from .transport import emd, gaussian_weight, median_sigma, wmd

SCHEMA_VERSION = "1"
DEFAULT_SENTINEL = "***"

_SURROGATE_KINDS = ("weighted_linear", "bayesian_ridge")


@dataclass(frozen=True)
class RunConfig:
    """Everything one attribution run depends on.

    ``sigma = None`` selects the median-distance bandwidth heuristic;
    ``alpha = 1`` keeps every record (no significance filtering);
    ``topk = None`` defers to the per-metric default.
    """

    prompt: str
    model: ModelSpec
    embeddings: str
    J: int = 64
    strategy: str = "bernoulli"
    seed: int = 0
    sigma: float | None = None
    p: int = 1
    alpha: float = 1.0
    surrogate_kind: str = "weighted_linear"
    ridge_lambda: float = 1e-8
    bootstrap_max_itr: int = 200
    threshold: float = 0.5
    topk: int | None = None

    def __post_init__(self) -> None:
        if not self.prompt or not self.prompt.strip():
            raise ConfigError("prompt must be a non-empty string")
        if self.J < 1:
            raise ConfigError(f"J must be >= 1, got {self.J}")
        try:
            MaskStrategy(self.strategy)
        except ValueError:
            raise ConfigError(f"unknown strategy {self.strategy!r}") from None
        if self.sigma is not None and (not self.sigma > 0 or math.isinf(self.sigma)):
            # reports must serialize under strict JSON, so no infinities
            raise ConfigError(f"sigma must be positive and finite, got {self.sigma}")
        if self.p not in (1, 2):
            raise ConfigError(f"p must be 1 or 2, got {self.p}")
        if not 0 <= self.alpha <= 1:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.surrogate_kind not in _SURROGATE_KINDS:
            raise ConfigError(f"unknown surrogate_kind {self.surrogate_kind!r}")
        if self.ridge_lambda < 0:
            raise ConfigError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        if self.bootstrap_max_itr < 1:
            raise ConfigError(f"bootstrap_max_itr must be >= 1, got {self.bootstrap_max_itr}")
        if not 0 <= self.threshold <= 1:
            raise ConfigError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.topk is not None and self.topk < 1:
            raise ConfigError(f"topk must be >= 1, got {self.topk}")

    def to_dict(self) -> dict:
        model: dict = {
            "kind": self.model.kind,
            "endpoint_or_command": self.model.endpoint_or_command,
            "request_template": self.model.request_template,
            "mode": self.model.mode,
            "timeout": self.model.timeout,
            "max_concurrency": self.model.max_concurrency,
            "retries": self.model.retries,
            "mock": None,
        }
        if self.model.mock is not None:
            model["mock"] = {
                "base_response": self.model.mock.base_response,
                "keyword_responses": dict(self.model.mock.keyword_responses),
            }
        return {
            "prompt": self.prompt,
            "model": model,
            "embeddings": self.embeddings,
            "J": self.J,
            "strategy": self.strategy,
            "seed": self.seed,
            "sigma": self.sigma,
            "p": self.p,
            "alpha": self.alpha,
            "surrogate_kind": self.surrogate_kind,
            "ridge_lambda": self.ridge_lambda,
            "bootstrap_max_itr": self.bootstrap_max_itr,
            "threshold": self.threshold,
            "topk": self.topk,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {
            "prompt", "model", "embeddings", "J", "strategy", "seed", "sigma",
            "p", "alpha", "surrogate_kind", "ridge_lambda", "bootstrap_max_itr",
            "threshold", "topk",
        }
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for required in ("prompt", "model", "embeddings"):
            if required not in doc:
                raise ConfigError(f"config field {required!r} is required")
        model_doc = doc["model"]
        if not isinstance(model_doc, dict) or "kind" not in model_doc:
            raise ConfigError("model must be an object with a 'kind' field")
        model_known = {
            "kind", "endpoint_or_command", "request_template", "mode",
            "timeout", "max_concurrency", "retries", "mock",
        }
        model_unknown = set(model_doc) - model_known
        if model_unknown:
            raise ConfigError(f"unknown model fields: {sorted(model_unknown)}")
        mock = None
        if model_doc.get("mock") is not None:
            mock_doc = model_doc["mock"]
            if not isinstance(mock_doc, dict) or "base_response" not in mock_doc:
                raise ConfigError("mock must be an object with base_response")
            mock = MockModel(
                base_response=mock_doc["base_response"],
                keyword_responses=dict(mock_doc.get("keyword_responses", {})),
            )
        try:
            spec = ModelSpec(
                kind=model_doc["kind"],
                endpoint_or_command=model_doc.get("endpoint_or_command", ""),
                request_template=model_doc.get(
                    "request_template", adapters.DEFAULT_REQUEST_TEMPLATE
                ),
                mode=model_doc.get("mode", "text"),
                timeout=model_doc.get("timeout", 30.0),
                max_concurrency=model_doc.get("max_concurrency", 1),
                retries=model_doc.get("retries", 0),
                mock=mock,
            )
            return cls(
                prompt=doc["prompt"],
                model=spec,
                embeddings=doc["embeddings"],
                J=doc.get("J", 64),
                strategy=doc.get("strategy", "bernoulli"),
                seed=doc.get("seed", 0),
                sigma=doc.get("sigma"),
                p=doc.get("p", 1),
                alpha=doc.get("alpha", 1.0),
                surrogate_kind=doc.get("surrogate_kind", "weighted_linear"),
                ridge_lambda=doc.get("ridge_lambda", 1e-8),
                bootstrap_max_itr=doc.get("bootstrap_max_itr", 200),
                threshold=doc.get("threshold", 0.5),
                topk=doc.get("topk"),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config value: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


@dataclass
class PerturbationRecord:
    """One masked prompt with its distances, weight, and significance."""

    index: int
    mask: np.ndarray
    features: np.ndarray
    prompt: str
    output: str | WeightedPointCloud | None
    delta: float  # input-side distance to the original prompt
    output_shift: float  # output-side distance to the baseline output
    weight: float
    p_value: float


@dataclass
class AttributionResult:
    """Fitted attribution for one prompt."""

    tokens: tuple[str, ...]
    coefficients: np.ndarray
    intercept: float
    normalized_scores: np.ndarray
    records: list[PerturbationRecord]
    kept_indices: list[int]
    fidelity: FidelityReport
    sigma_used: float
    seed: int
    config: RunConfig
    posterior_variances: np.ndarray | None = None


def _gather_raw(
    spec: ModelSpec, prompts: Sequence[str], cache: ResponseCache | None
) -> list[str]:
    """One raw response per prompt, via the cache when available."""
    state = {"cache": cache}

    def fetch(prompt: str) -> str:
        live_cache = state["cache"]
        key = digest_key(spec, prompt) if live_cache is not None else ""
        if live_cache is not None:
            try:
                hit = live_cache.get(key)
            except CacheIOError as exc:
                warnings.warn(f"cache disabled: {exc}", CacheUnavailableWarning)
                state["cache"] = None
                hit = None
            if hit is not None:
                return hit
        raw = adapters.fetch_raw(spec, prompt)
        live_cache = state["cache"]
        if live_cache is not None:
            try:
                live_cache.put(key, raw)
            except CacheIOError as exc:
                warnings.warn(f"cache disabled: {exc}", CacheUnavailableWarning)
                state["cache"] = None
        return raw

    if spec.max_concurrency > 1:
        with ThreadPoolExecutor(max_workers=spec.max_concurrency) as pool:
            return list(pool.map(fetch, prompts))
    return [fetch(prompt) for prompt in prompts]


def _output_sample(output: str | WeightedPointCloud, table: EmbeddingTable) -> np.ndarray:
    """The output as a sample of vectors for the bootstrap test."""
    if isinstance(output, WeightedPointCloud):
        return np.asarray(output.points, dtype=float)
    return embed_tokens(output.split(), table)


def _fit_surrogate(
    config: RunConfig, Z: np.ndarray, y: np.ndarray, w: np.ndarray
) -> SurrogateModel:
    if config.surrogate_kind == "bayesian_ridge":
        return fit_bayesian_ridge(Z, y, w)
    return fit_weighted_linear(Z, y, w, ridge_lambda=config.ridge_lambda)


def explain(config: RunConfig, cache: ResponseCache | None = None) -> AttributionResult:
    """Attribute the model's output to the prompt's tokens.

    Record 0 is always the unperturbed prompt with delta = 0,
    output_shift = 0 and weight 1.  Identical configs (and a deterministic
    model) produce identical results; a warm cache changes nothing but the
    number of adapter calls.  Module errors propagate; an underdetermined
    fit, constant targets or records masked down to no in-vocabulary token
    degrade to warnings.
    """
    table = load_embedding_table(config.embeddings)
    sequence = tokenize(config.prompt)
    m = len(sequence)
    masks = sample_masks(m, config.J, config.seed, config.strategy)
    prompts = [apply_mask(sequence, mask) for mask in masks]

    raw_outputs = _gather_raw(config.model, prompts, cache)
    outputs = [adapters.parse_output(config.model, raw) for raw in raw_outputs]

    baseline_tokens = list(sequence.tokens)
    if all(table.lookup(t) is None for t in baseline_tokens):
        raise AllTokensOOVError("no prompt token is in the embedding table")
    try:
        baseline_sample = _output_sample(outputs[0], table)
    except AllTokensOOVError as exc:
        raise AllTokensOOVError(
            "no token of the unperturbed output is in the embedding table"
        ) from exc

    deltas = [0.0]
    shifts = [0.0]
    p_values = [1.0]
    usable = [0]
    dropped = 0
    for j in range(1, len(masks)):
        kept_tokens = [t for t, bit in zip(sequence.tokens, masks[j]) if bit]
        # a mask can strip every in-vocabulary token from the prompt or the
        # response (an OOV sentinel kept alone, say); such records measure
        # nothing and are dropped instead of aborting the run
        try:
            delta = wmd(baseline_tokens, kept_tokens, table)
            if isinstance(outputs[j], WeightedPointCloud):
                shift = emd(outputs[0], outputs[j], p=config.p).distance
            else:
                shift = wmd(outputs[0].split(), outputs[j].split(), table)
            sig = bootstrap_pvalue(
                baseline_sample,
                _output_sample(outputs[j], table),
                max_itr=config.bootstrap_max_itr,
                seed=config.seed,
                p=config.p,
            )
        except AllTokensOOVError:
            dropped += 1
            continue
        deltas.append(delta)
        shifts.append(shift)
        p_values.append(sig.p_value)
        usable.append(j)
    if dropped:
        warnings.warn(
            f"dropped {dropped} record(s) left with no in-vocabulary token",
            DroppedRecordsWarning,
        )

    interim = [
        PerturbationRecord(
            index=j,
            mask=masks[j],
            features=mask_to_features(masks[j]),
            prompt=prompts[j],
            output=outputs[j],
            delta=deltas[i],
            output_shift=shifts[i],
            weight=1.0,
            p_value=p_values[i],
        )
        for i, j in enumerate(usable)
    ]
    kept = filter_significant(interim, config.alpha)
    kept_indices = [r.index for r in kept]
    if len(kept) < m + 2:
        warnings.warn(
            f"only {len(kept)} records survive filtering for {m} tokens; "
            "the surrogate fit is underdetermined",
            InsufficientRecordsWarning,
        )

    sigma_used = config.sigma if config.sigma is not None else median_sigma(
        [r.delta for r in kept]
    )
    for record in interim:
        record.weight = gaussian_weight(record.delta, sigma_used)

    Z = np.stack([r.features for r in kept])
    y = np.array([r.output_shift for r in kept])
    w = np.array([r.weight for r in kept])
    model = _fit_surrogate(config, Z, y, w)
    fidelity = fidelity_report(
        y, predict(model, Z), w, n_features=m, allow_degenerate=True
    )
    if fidelity.r2 is None:
        warnings.warn(
            "output distances are constant across records; r2 scores are null",
            DegenerateFidelityWarning,
        )

    return AttributionResult(
        tokens=sequence.tokens,
        coefficients=model.coefficients,
        intercept=model.intercept,
        normalized_scores=minmax_normalize(np.abs(model.coefficients)),
        records=interim,
        kept_indices=kept_indices,
        fidelity=fidelity,
        sigma_used=float(sigma_used),
        seed=config.seed,
        config=config,
        posterior_variances=model.posterior_variances,
    )


def evaluate(
    config: RunConfig,
    truth: Sequence[int],
    cache: ResponseCache | None = None,
) -> dict:
    """Attribution accuracy against per-token binary ground truth.

    Returns ``{"acc", "f1", "auroc"}`` of the normalized scores at the
    configured threshold.  Truth must carry one 0/1 label per prompt token.
    """
    result = explain(config, cache=cache)
    if len(truth) != len(result.tokens):
        raise LengthMismatchError(
            f"{len(truth)} labels for {len(result.tokens)} tokens"
        )
    scores = result.normalized_scores
    return {
        "acc": att_acc(scores, truth, threshold=config.threshold),
        "f1": att_f1(scores, truth, threshold=config.threshold),
        "auroc": att_auroc(scores, truth),
    }


def _default_topk(config: RunConfig, m: int, truth: Sequence[int] | None = None) -> int:
    if config.topk is not None:
        return config.topk
    if truth is not None and sum(truth) > 0:
        return int(sum(truth))
    return math.ceil(m / 2)


def stability_probe(
    config: RunConfig,
    sentinel: str = DEFAULT_SENTINEL,
    cache: ResponseCache | None = None,
) -> float:
    """Top-k agreement between a run and a sentinel-extended rerun.

    The sentinel token is appended to the prompt and both runs are compared
    by the Jaccard overlap of their top-k tokens (token-string identity, so
    the extra token does not shift positions).  k defaults to half the
    original token count, rounded up.
    """
    base = explain(config, cache=cache)
    extended = explain(
        replace(config, prompt=config.prompt + " " + sentinel), cache=cache
    )
    k = _default_topk(config, len(base.tokens))
    return jaccard_topk(
        base.coefficients,
        extended.coefficients,
        k,
        tokens_a=list(base.tokens),
        tokens_b=list(extended.tokens),
    )


def consistency_probe(
    config: RunConfig,
    runs: int = 10,
    reseed: bool = False,
    cache: ResponseCache | None = None,
) -> tuple[float, float]:
    """Spread of coefficients across repeated runs of the same prompt.

    With ``reseed`` false every run reuses the configured seed, so a
    deterministic model must yield zero variance; with ``reseed`` true run i
    uses ``seed + i``.  Returns the (variance, std) pair of
    :func:`gsmile.metrics.consistency_stats`.
    """
    vectors = []
    for i in range(runs):
        seed = config.seed + i if reseed else config.seed
        result = explain(replace(config, seed=seed), cache=cache)
        vectors.append(np.asarray(result.coefficients, dtype=float))
    return consistency_stats(vectors)


# --- serialization ----------------------------------------------------------


def result_to_document(result: AttributionResult) -> dict:
    """JSON-ready dictionary for a result (schema_version 1)."""
    doc: dict = {
        "schema_version": SCHEMA_VERSION,
        "tokens": list(result.tokens),
        "coefficients": [float(c) for c in result.coefficients],
        "intercept": float(result.intercept),
        "normalized_scores": [float(s) for s in result.normalized_scores],
        "sigma_used": float(result.sigma_used),
        "seed": result.seed,
        "kept_indices": list(result.kept_indices),
        "records": [
            {
                "mask": [int(b) for b in r.mask],
                "delta": float(r.delta),
                "Delta": float(r.output_shift),
                "weight": float(r.weight),
                "p_value": float(r.p_value),
            }
            for r in result.records
        ],
        "fidelity": {
            "r2": result.fidelity.r2,
            "r2_w": result.fidelity.r2_w,
            "r2_w_adj": result.fidelity.r2_w_adj,
            "wmse": result.fidelity.wmse,
            "wmae": result.fidelity.wmae,
            "l1": result.fidelity.l1,
            "l2": result.fidelity.l2,
        },
        "config": result.config.to_dict(),
        "posterior_variances": (
            None
            if result.posterior_variances is None
            else [float(v) for v in result.posterior_variances]
        ),
    }
    return doc


def export_report(result: AttributionResult, path: str | Path | None = None) -> str:
    """Serialize a result to canonical JSON; write it when a path is given.

    The encoding is deterministic (sorted keys, fixed separators), so two
    identical results export byte-identically.
    """
    text = json.dumps(
        result_to_document(result),
        sort_keys=True,
        indent=2,
        allow_nan=False,
    )
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def import_report(source: str | Path) -> AttributionResult:
    """Rebuild a result from an exported report (path or JSON text).

    Inverse of :func:`export_report` for everything the report carries;
    per-record prompts and outputs are not serialized and come back as None.
    """
    text = source if isinstance(source, str) and source.lstrip().startswith("{") else Path(source).read_text(encoding="utf-8")
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported report schema {doc.get('schema_version')!r}"
        )
    config = RunConfig.from_dict(doc["config"])
    records = [
        PerturbationRecord(
            index=i,
            mask=np.array(r["mask"], dtype=np.int8),
            features=np.array(r["mask"], dtype=float),
            prompt="",
            output=None,
            delta=r["delta"],
            output_shift=r["Delta"],
            weight=r["weight"],
            p_value=r["p_value"],
        )
        for i, r in enumerate(doc["records"])
    ]
    fid = doc["fidelity"]
    fidelity = FidelityReport(
        r2=fid["r2"],
        r2_w=fid["r2_w"],
        r2_w_adj=fid["r2_w_adj"],
        wmse=fid["wmse"],
        wmae=fid["wmae"],
        l1=fid["l1"],
        l2=fid["l2"],
    )
    variances = doc.get("posterior_variances")
    return AttributionResult(
        tokens=tuple(doc["tokens"]),
        coefficients=np.array(doc["coefficients"], dtype=float),
        intercept=float(doc["intercept"]),
        normalized_scores=np.array(doc["normalized_scores"], dtype=float),
        records=records,
        kept_indices=list(doc["kept_indices"]),
        fidelity=fidelity,
        sigma_used=float(doc["sigma_used"]),
        seed=int(doc["seed"]),
        config=config,
        posterior_variances=None if variances is None else np.array(variances, dtype=float),
    )


# --- heatmap rendering -------------------------------------------------------


def _heat_rgb(score: float) -> tuple[int, int, int]:
    """White for 0 through dark red for 1."""
    red = 255 - round(score * (255 - 139))
    other = 255 - round(score * 255)
    return red, other, other


_HTML_PAGE = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>token attribution</title>
<style>
body {{ font-family: sans-serif; margin: 2em; }}
.heatmap span {{ padding: 0.25em 0.35em; margin: 0 0.1em; border-radius: 4px;
                 display: inline-block; }}
</style>
</head>
<body>
<p class="heatmap">{spans}</p>
</body>
</html>
"""


def render_heatmap(result: AttributionResult, fmt: str = "html") -> str:
    """Render per-token scores as an HTML page or a one-line ANSI string.

    A pure function of the result: backgrounds interpolate from white at
    score 0 to dark red at score 1, and each HTML span carries the exact
    score in its tooltip.
    """
    scores = [float(s) for s in result.normalized_scores]
    if fmt == "html":
        spans = []
        for token, score, coef in zip(result.tokens, scores, result.coefficients):
            r, g, b = _heat_rgb(score)
            fg = "#ffffff" if score > 0.6 else "#000000"
            spans.append(
                f'<span style="background-color: rgb({r},{g},{b}); color: {fg}" '
                f'title="score={score:.4f} coefficient={float(coef):+.6f}">'
                f"{html_mod.escape(token)}</span>"
            )
        return _HTML_PAGE.format(spans="\n".join(spans))
    if fmt == "ansi":
        cells = []
        for token, score in zip(result.tokens, scores):
            step = 5 - round(score * 5)  # 231 is white, 196 is full red
            bg = 196 + 7 * step
            fg = 15 if score > 0.6 else 0
            cells.append(f"\x1b[48;5;{bg}m\x1b[38;5;{fg}m {token} \x1b[0m")
        return " ".join(cells)
    raise ValueError(f"unknown heatmap format {fmt!r}")
