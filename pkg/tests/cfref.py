"""Brute-force reference implementations for graph neighbor queries."""

from __future__ import annotations

import random

from recteacher.graph import InteractionGraph


def make_graph(user_items: dict[str, set[str]]) -> InteractionGraph:
    item_adj: dict[str, set[str]] = {}
    for user, items in user_items.items():
        for item in items:
            item_adj.setdefault(item, set()).add(user)
    return InteractionGraph(
        user_adj={u: frozenset(s) for u, s in user_items.items()},
        item_adj={i: frozenset(s) for i, s in item_adj.items()},
    )


def random_graph(rng: random.Random, max_users: int = 30, max_items: int = 40) -> InteractionGraph:
    users = [f"u{n:02d}" for n in range(1, rng.randint(2, max_users) + 1)]
    items = [f"i{n:02d}" for n in range(1, rng.randint(2, max_items) + 1)]
    user_items: dict[str, set[str]] = {}
    for user in users:
        count = rng.randint(1, min(len(items), 8))
        user_items[user] = set(rng.sample(items, count))
    return make_graph(user_items)


def brute_item_neighbors(graph: InteractionGraph, anchor: str, k: int) -> list[tuple[str, int]]:
    """O(n^2) co-occurrence scan over all other items, ties by ascending id."""
    anchor_users = graph.item_adj[anchor]
    scores = []
    for other, users in graph.item_adj.items():
        if other == anchor:
            continue
        shared = len(anchor_users & users)
        if shared:
            scores.append((other, shared))
    scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return scores[:k]


def brute_user_neighbors(graph: InteractionGraph, anchor: str, k: int) -> list[tuple[str, int]]:
    anchor_items = graph.user_adj[anchor]
    scores = []
    for other, items in graph.user_adj.items():
        if other == anchor:
            continue
        shared = len(anchor_items & items)
        if shared:
            scores.append((other, shared))
    scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return scores[:k]


def brute_pool(graph: InteractionGraph, anchor: str, k_users: int) -> list[str]:
    own = graph.user_adj[anchor]
    counts: dict[str, int] = {}
    for other, _score in brute_user_neighbors(graph, anchor, k_users):
        for item in graph.user_adj[other]:
            if item not in own:
                counts[item] = counts.get(item, 0) + 1
    ordered = sorted(counts.items(), key=lambda pair: (-pair[1], pair[0]))
    return [item for item, _count in ordered]
