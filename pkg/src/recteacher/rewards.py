"""Composite rewards and RL difficulty bucketing.

All reward values are exact rationals so total-set membership is testable
without float tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
import logging
import random
from typing import Mapping, Sequence, TypeVar

from .errors import GatewayError, InsufficientBucket, TagError, ToolParseError
from .evaluate import EvalInstance
from .gateway import DEFAULT_GROUP_SIZE, Gateway, chat_request
from .tags import decode_json_stream, decode_tool_call
from .trajectory import ParsedTrajectory, parse, top1_hit

logger = logging.getLogger(__name__)

FORMAT_PASS = 1
FORMAT_FAIL = -1

# Sections a trajectory must contain to earn the format reward.
REQUIRED_SECTIONS = ("plan", "reflection", "recommend")

DEFAULT_RL_TARGET = 500
DEFAULT_RL_RATIO = (3, 4, 3)  # easy : medium : hard


@dataclass(frozen=True)
class RewardBreakdown:
    format_score: int
    outcome_score: Fraction
    total: Fraction


class Bucket(Enum):
    EASY = "Easy"
    MEDIUM = "Medium"
    HARD = "Hard"
    EXCLUDED = "Excluded"


def _format_of(parsed: ParsedTrajectory) -> int:
    tags = {section.tag for section in parsed.sections}
    if not set(REQUIRED_SECTIONS) <= tags:
        return FORMAT_FAIL
    for section in parsed.sections:
        for body in section.tool_calls:
            try:
                values = decode_json_stream(body)
            except ValueError:
                return FORMAT_FAIL
            if len(values) != 1:
                return FORMAT_FAIL  # exactly one call object per block
            try:
                decode_tool_call(values[0])
            except ToolParseError:
                return FORMAT_FAIL
    return FORMAT_PASS


def format_reward(text: str) -> int:
    """+1 iff the text parses, has plan/reflection/recommend, and every
    tool_call body is one valid call of a recognized tool; else -1."""
    try:
        parsed = parse(text)
    except TagError:
        return FORMAT_FAIL
    return _format_of(parsed)


def outcome_reward(ranking: Sequence[str], ground_truth: str) -> Fraction:
    """Tiered rank reward: top-1 full credit, top-3 two thirds, top-5 one third."""
    try:
        index = list(ranking).index(ground_truth)
    except ValueError:
        return Fraction(0)
    if index == 0:
        return Fraction(1)
    if index <= 2:
        return Fraction(2, 3)
    if index <= 4:
        return Fraction(1, 3)
    return Fraction(0)


def composite_reward(text: str, ground_truth: str) -> RewardBreakdown:
    try:
        parsed = parse(text)
    except TagError:
        return RewardBreakdown(
            format_score=FORMAT_FAIL,
            outcome_score=Fraction(0),
            total=Fraction(FORMAT_FAIL),
        )
    format_score = _format_of(parsed)
    outcome_score = outcome_reward(parsed.ranking, ground_truth)
    return RewardBreakdown(
        format_score=format_score,
        outcome_score=outcome_score,
        total=format_score + outcome_score,
    )


def bucket(success_count: int, g: int = DEFAULT_GROUP_SIZE) -> Bucket:
    """Difficulty by success count; 0 and g are excluded from RL data."""
    if g < 1:
        raise ValueError("g must be >= 1")
    if not 0 <= success_count <= g:
        raise ValueError(f"success count {success_count} outside 0..{g}")
    if success_count in (0, g):
        return Bucket.EXCLUDED
    if success_count <= min(2, g - 1):
        return Bucket.HARD
    if success_count <= min(5, g - 1):
        return Bucket.MEDIUM
    return Bucket.EASY


def largest_remainder(total: int, weights: Sequence[int]) -> tuple[int, ...]:
    """Integer quotas proportional to weights, summing exactly to total."""
    if total < 0:
        raise ValueError("total must be >= 0")
    if not weights or any(w < 0 for w in weights) or sum(weights) == 0:
        raise ValueError("weights must be non-negative and sum positive")
    denom = sum(weights)
    shares = [Fraction(total * w, denom) for w in weights]
    quotas = [int(s) for s in shares]
    leftover = total - sum(quotas)
    remainders = sorted(
        range(len(weights)),
        key=lambda i: (shares[i] - quotas[i], -i),
        reverse=True,
    )
    for i in remainders[:leftover]:
        quotas[i] += 1
    return tuple(quotas)


T = TypeVar("T")


def compose_rl_set(
    buckets: Mapping[Bucket, Sequence[T]],
    target_total: int = DEFAULT_RL_TARGET,
    ratio: Sequence[int] = DEFAULT_RL_RATIO,
    rng_seed: int | str = 0,
) -> list[T]:
    """Seeded sample of each difficulty bucket, concatenated easy/medium/hard."""
    if len(ratio) != 3:
        raise ValueError("ratio must have exactly three weights (easy, medium, hard)")
    quotas = largest_remainder(target_total, ratio)
    order = (Bucket.EASY, Bucket.MEDIUM, Bucket.HARD)
    rng = random.Random(rng_seed)
    chosen: list[T] = []
    for which, need in zip(order, quotas):
        available = list(buckets.get(which, ()))
        if len(available) < need:
            raise InsufficientBucket(which.value, need, len(available))
        chosen.extend(rng.sample(available, need))
    return chosen


@dataclass(frozen=True)
class PolicyPrompt:
    system: str
    user: str


def success_count(
    instance: EvalInstance,
    g: int,
    gateway: Gateway,
    policy_prompt: PolicyPrompt,
    temperature: float | None = None,
    top_p: float | None = None,
) -> int:
    """Sample g trajectories for the instance and count top-1 hits.

    Per-sample gateway failures count as misses; if every sample failed, the
    first failure is raised.
    """
    kwargs = {}
    if temperature is not None:
        kwargs["temperature"] = temperature
    if top_p is not None:
        kwargs["top_p"] = top_p
    request = chat_request(
        [("system", policy_prompt.system), ("user", policy_prompt.user)],
        **kwargs,
    )
    replies = gateway.sample_group(request, g=g)
    failures = [r for r in replies if isinstance(r, GatewayError)]
    if len(failures) == len(replies):
        raise failures[0]
    hits = 0
    for reply in replies:
        if isinstance(reply, GatewayError):
            logger.warning("rollout failed for user %s: %s", instance.user, reply)
            continue
        if top1_hit(reply.content, instance.ground_truth) is True:
            hits += 1
    return hits
