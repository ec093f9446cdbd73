"""Prompt decomposition and mask-based perturbation.

A prompt is split into whitespace-delimited tokens.  Perturbed variants are
produced by binary masks over those tokens: bit i keeps (1) or drops (0)
token i.  The all-ones mask reproduces the unperturbed prompt and is always
emitted first so downstream code can use record 0 as the baseline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EmptyPromptError, ExhaustiveTooLargeError, LengthMismatchError

_TOKEN_RE = re.compile(r"\S+")

# exhaustive enumeration is capped at 2**16 - 1 masks
MAX_EXHAUSTIVE_TOKENS = 16


class MaskStrategy(str, Enum):
    BERNOULLI = "bernoulli"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class TokenSequence:
    """Tokens of a prompt plus their positions in the original string.

    ``spans[i]`` is the ``(start, end)`` index pair such that
    ``prompt[start:end] == tokens[i]``.  Spans are strictly increasing and
    non-overlapping.
    """

    tokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(prompt: str) -> TokenSequence:
    """Split a prompt into whitespace-delimited tokens with spans.

    Raises EmptyPromptError when the prompt is empty or all whitespace.
    Joining the tokens with single spaces reproduces the whitespace-normalized
    prompt.
    """
    matches = list(_TOKEN_RE.finditer(prompt))
    if not matches:
        raise EmptyPromptError("prompt has no tokens")
    tokens = tuple(m.group(0) for m in matches)
    spans = tuple(m.span() for m in matches)
    return TokenSequence(tokens=tokens, spans=spans)


def sample_masks(m: int, J: int, seed: int, strategy: MaskStrategy | str) -> list[np.ndarray]:
    """Draw J inclusion masks over m tokens.

    bernoulli: each bit is i.i.d. with inclusion probability 0.5; the all-zero
    mask is rejected and redrawn; repeats are allowed.  The all-ones mask is
    prepended as mask 0, so J-1 masks are random.

    exhaustive: all ``2**m - 1`` non-empty masks, all-ones first and the rest
    in ascending binary order (token 0 is the most significant bit); J is
    ignored.  Raises ExhaustiveTooLargeError for m > 16.

    Identical ``(m, J, seed, strategy)`` always yields an identical list.
    """
    if m < 1:
        raise EmptyPromptError("need at least one token to mask")
    strategy = MaskStrategy(strategy)
    ones = np.ones(m, dtype=np.int8)
    if strategy is MaskStrategy.EXHAUSTIVE:
        if m > MAX_EXHAUSTIVE_TOKENS:
            raise ExhaustiveTooLargeError(
                f"exhaustive enumeration supports at most {MAX_EXHAUSTIVE_TOKENS} tokens, got {m}"
            )
        masks = [ones]
        full = 2**m - 1
        for value in range(1, full):
            bits = [(value >> (m - 1 - i)) & 1 for i in range(m)]
            masks.append(np.array(bits, dtype=np.int8))
        return masks

    if J < 1:
        raise EmptyPromptError("J must be at least 1")
    rng = np.random.default_rng(seed)
    masks = [ones]
    while len(masks) < J:
        bits = rng.integers(0, 2, size=m, dtype=np.int8)
        if not bits.any():
            continue
        masks.append(bits)
    return masks


def apply_mask(tokens: TokenSequence, mask: np.ndarray) -> str:
    """Join the tokens kept by ``mask`` with single spaces.

    Raises LengthMismatchError when the mask length differs from the token
    count.  The all-ones mask returns the whitespace-normalized prompt.
    """
    if len(mask) != len(tokens):
        raise LengthMismatchError(
            f"mask has {len(mask)} bits for {len(tokens)} tokens"
        )
    return " ".join(t for t, bit in zip(tokens.tokens, mask) if bit)


def mask_to_features(mask: np.ndarray) -> np.ndarray:
    """Return the mask as a float feature vector for the surrogate fit."""
    return np.asarray(mask, dtype=float)
