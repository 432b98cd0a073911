"""Generate the bundled toy corpus: a small seeded dataset for offline runs.

30 users, 50 items in 5 genres, roughly 400 interactions. Every interaction of
a user targets a distinct item and at most 20 items per user, which leaves at
least 19 never-touched items to draw negatives from. Timestamps increase
strictly within each user; a third of the users end with a long gap so the
scenario filters have something to tell apart.
"""

from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

SEED = 20240817
USER_COUNT = 30
ITEM_COUNT = 50
MAX_ITEMS_PER_USER = 20

GENRES = ("mystery", "fantasy", "history", "romance", "science")

TITLE_HEADS = (
    "Crimson", "Silent", "Winter", "Hollow", "Golden", "Last", "Iron",
    "Paper", "Midnight", "Broken",
)
TITLE_TAILS = (
    "Harbor", "Archive", "Garden", "Equation", "Letters", "Crossing",
    "Orchard", "Satellite", "Covenant", "Lantern",
)

REVIEW_SNIPPETS = (
    "kept me reading late into the night",
    "slow start but a strong finish",
    "characters felt flat to me",
    "a comfortable reread candidate",
    "the pacing dragged in the middle",
    "sharp dialogue and a tidy plot",
    "not my usual genre but it worked",
    "ending landed better than expected",
    "too predictable for my taste",
    "lovely prose, thin story",
)

AGE_GROUPS = ("18-24", "25-34", "35-44", "45-54", "55+")

DAY = 86400
BASE_TS = 1_500_000_000


def build_records(rng: random.Random) -> tuple[list[dict], list[dict], list[dict]]:
    items = []
    for idx in range(1, ITEM_COUNT + 1):
        genre = GENRES[(idx - 1) // (ITEM_COUNT // len(GENRES))]
        title = f"The {TITLE_HEADS[(idx - 1) % 10]} {TITLE_TAILS[(idx * 7) % 10]}"
        items.append({
            "item_id": f"i{idx:03d}",
            "title": title,
            "genre": genre,
            "year": str(1980 + (idx * 3) % 40),
        })
    by_genre = {genre: [rec["item_id"] for rec in items if rec["genre"] == genre]
                for genre in GENRES}

    users = []
    reviews = []
    for idx in range(1, USER_COUNT + 1):
        user_id = f"u{idx:03d}"
        favorites = rng.sample(GENRES, 2)
        users.append({
            "user_id": user_id,
            "age_group": rng.choice(AGE_GROUPS),
            "favorite_genres": ", ".join(sorted(favorites)),
        })

        # a few short-history users for the cold-start scenario
        count = rng.choice((4, 5)) if idx % 10 == 0 else rng.randint(10, MAX_ITEMS_PER_USER)
        favorite_pool = sorted(set(by_genre[favorites[0]]) | set(by_genre[favorites[1]]))
        chosen: list[str] = []
        seen: set[str] = set()
        while len(chosen) < count:
            pool = favorite_pool if rng.random() < 0.8 else [rec["item_id"] for rec in items]
            pick = rng.choice(pool)
            if pick not in seen:
                seen.add(pick)
                chosen.append(pick)

        ts = BASE_TS + idx * 37 * DAY
        for pos, item_id in enumerate(chosen):
            last = pos == len(chosen) - 1
            if last and idx % 3 == 0:
                ts += rng.randint(40, 90) * DAY  # long final gap
            else:
                ts += rng.randint(1, 20) * DAY
            record = {"user_id": user_id, "item_id": item_id, "timestamp": ts}
            if rng.random() < 0.85:
                record["rating"] = float(rng.choices((2, 3, 4, 5), weights=(1, 3, 4, 3))[0])
            if rng.random() < 0.6:
                record["review_text"] = rng.choice(REVIEW_SNIPPETS)
            reviews.append(record)

    return users, items, reviews


def write_jsonl(path: Path, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/toy", help="output directory")
    parser.add_argument("--seed", type=int, default=SEED)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    users, items, reviews = build_records(rng)
    out = Path(args.out)
    write_jsonl(out / "users.jsonl", users)
    write_jsonl(out / "items.jsonl", items)
    write_jsonl(out / "reviews.jsonl", reviews)
    print(f"wrote {len(users)} users, {len(items)} items, {len(reviews)} reviews to {out}")


if __name__ == "__main__":
    main()
