"""Long-history preprocessing: iterative summarization over sliding windows.

Distant history is folded chunk by chunk into one rolling summary; the final
chunk stays raw so the orchestrator sees recent behavior verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .corpus import Interaction, ItemMeta
from .errors import EmptyInput, MissingSummaryTags
from .gateway import Gateway, chat_request
from . import prompts
from .tags import SUMMARY_TAG, extract_tagged

DEFAULT_WINDOW_M = 10
REVIEW_EXCERPT_CHARS = 300  # cap per rendered review


@dataclass(frozen=True)
class HybridHistory:
    long_term_summary: str
    recent_raw: tuple[Interaction, ...]
    window_size: int


def chunk(history: Sequence[Interaction], m: int) -> list[list[Interaction]]:
    """Consecutive groups of m; the final group holds the 1..m remainder."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return [list(history[i:i + m]) for i in range(0, len(history), m)]


def render_interaction(interaction: Interaction, items: Mapping[str, ItemMeta]) -> str:
    stamp = datetime.fromtimestamp(interaction.timestamp, tz=timezone.utc)
    meta = items.get(interaction.item)
    title = meta.title if meta is not None else "(unknown)"
    parts = [
        f"Review time: {stamp.strftime('%Y-%m-%d-%I%p')}",
        f"item_id: {interaction.item}",
        f"title: {title}",
    ]
    if interaction.rating is not None:
        parts.append(f"rating: {interaction.rating:g}")
    if interaction.review_text:
        excerpt = interaction.review_text[:REVIEW_EXCERPT_CHARS]
        parts.append(f'user review text: "{excerpt}"')
    return " ".join(parts)


def abstract(
    history: Sequence[Interaction],
    m: int,
    gateway: Gateway,
    render: Callable[[Interaction], str],
    domain: str = prompts.DEFAULT_DOMAIN,
    templates_dir: Path | None = None,
    user_block: str = "",
) -> HybridHistory:
    """Fold all chunks but the last into a rolling summary.

    Gateway calls = len(chunks) - 1 when there are 2+ chunks, else 0.
    """
    if not history:
        raise EmptyInput("history is empty")
    chunks = chunk(history, m)
    if len(chunks) <= 1:
        return HybridHistory(long_term_summary="", recent_raw=tuple(history), window_size=m)

    system_text = prompts.history_summary_system(domain, templates_dir)
    summary = ""
    for part in chunks[:-1]:
        block = "\n".join(f"{i}. {render(x)}" for i, x in enumerate(part, start=1))
        user_text = prompts.history_summary_user(user_block, summary, block, templates_dir)
        reply = gateway.complete(chat_request([
            ("system", system_text),
            ("user", user_text),
        ]))
        body = extract_tagged(reply.content, SUMMARY_TAG)
        if body is None or not body.strip():
            raise MissingSummaryTags(f"chunk of {len(part)} interactions")
        summary = body.strip()
    return HybridHistory(long_term_summary=summary, recent_raw=tuple(chunks[-1]), window_size=m)
