"""Deterministic toy restaurant corpus for tests, demos, and smoke runs.

Records mimic the restaurant-MR shape: up to 8 attributes, multi-token
values, references realized from a handful of sentence patterns so openings
vary (that variety is what makes trigger guidance measurable).  A held-out
name pool lets tests exercise copying of never-seen tokens.
"""

from __future__ import annotations

import numpy as np

from .samples import DataSample
from .tokenizer import tokenize

TRAIN_NAMES = [
    "The Phoenix", "The Eagle", "The Mill", "Blue Spice", "The Vaults",
    "The Punter", "Loch Fyne", "The Cricketers", "Green Man", "Clowns",
    "Strada", "Cocum", "The Golden Curry", "Bibimbap House", "The Rice Boat",
    "Taste of Cambridge", "The Wrestlers", "Midsummer House", "Fitzbillies",
    "The Olive Grove",
]

TEST_NAMES = [
    "The Comet", "Silver Birch", "The Lantern", "Harbour House",
    "The Old Forge", "Maple Court", "The Brass Kettle", "Quayside Rooms",
]

NEAR_POOL = [
    "Café Sicilia", "Crowne Plaza Hotel", "The Sorrento", "Café Rouge",
    "Raja Indian Cuisine", "The Bakers", "Express by Holiday Inn", "Ranch",
]

EAT_TYPES = ["pub", "restaurant", "coffee shop"]
FOODS = ["english", "french", "italian", "indian", "chinese", "japanese"]
PRICES = ["cheap", "moderate", "high", "less than £20", "£20-25", "more than £30"]
RATINGS = ["1 out of 5", "3 out of 5", "5 out of 5", "low", "average", "high"]
AREAS = ["riverside", "city centre"]
FAMILY = ["yes", "no"]

_OPTIONAL = ["eat_type", "food", "price_range", "customer_rating", "area", "family_friendly", "near"]
_POOLS = {
    "eat_type": EAT_TYPES,
    "food": FOODS,
    "price_range": PRICES,
    "customer_rating": RATINGS,
    "area": AREAS,
    "family_friendly": FAMILY,
    "near": NEAR_POOL,
}


def _realize(attrs: dict[str, str], variant: int) -> str:
    name = attrs["name"]
    eat = attrs.get("eat_type", "place")
    if variant == 1 and "near" in attrs:
        opening = f"near {attrs['near']} you will find {name} , a {eat}"
    elif variant == 2 and "food" in attrs:
        opening = f"if you like {attrs['food']} food try {name} , a {eat}"
    else:
        variant = 0
        opening = f"{name} is a {eat}"
    first: list[str] = [opening]
    if "food" in attrs and variant != 2:
        first.append(f"serving {attrs['food']} food")
    if "area" in attrs:
        first.append(f"in the {attrs['area']} area")
    rest: list[str] = []
    if "price_range" in attrs:
        rest.append(f"priced {attrs['price_range']}")
    if "customer_rating" in attrs:
        rest.append(f"rated {attrs['customer_rating']}")
    if "family_friendly" in attrs:
        rest.append(
            "family friendly" if attrs["family_friendly"] == "yes" else "not family friendly"
        )
    if "near" in attrs and variant != 1:
        rest.append(f"near {attrs['near']}")
    text = " ".join(first) + " ."
    if rest:
        text += " it is " + " , ".join(rest) + " ."
    return text


def synthetic_corpus(
    n: int,
    seed: int = 0,
    name_pool: list[str] | None = None,
    max_references: int = 1,
    id_prefix: str = "syn",
) -> list[DataSample]:
    names = name_pool if name_pool is not None else TRAIN_NAMES
    rng = np.random.default_rng(seed)
    samples: list[DataSample] = []
    for i in range(n):
        attrs = {"name": names[int(rng.integers(len(names)))]}
        for key in _OPTIONAL:
            if rng.random() < 0.8:
                pool = _POOLS[key]
                attrs[key] = pool[int(rng.integers(len(pool)))]
        fields: list[str] = []
        values: list[str] = []
        for key in ["name"] + [k for k in _OPTIONAL if k in attrs]:
            for tok in tokenize(attrs[key]):
                fields.append(key)
                values.append(tok)
        variants = list(rng.permutation(3) + 1)
        n_refs = 1 if max_references <= 1 else int(rng.integers(1, max_references + 1))
        refs = []
        seen: set[str] = set()
        for v in variants[:n_refs]:
            text = _realize(attrs, int(v))
            if text not in seen:
                seen.add(text)
                refs.append(tokenize(text))
        samples.append(
            DataSample(fields, values, refs, "inform", sample_id=f"{id_prefix}-{i}")
        )
    return samples


def synthetic_splits(
    n_train: int, n_val: int, n_test: int, seed: int = 0, eval_references: int = 2
) -> tuple[list[DataSample], list[DataSample], list[DataSample]]:
    """Train/validation/test with held-out test names (copy targets)."""
    train = synthetic_corpus(n_train, seed=seed, id_prefix="train")
    val = synthetic_corpus(n_val, seed=seed + 1, max_references=eval_references, id_prefix="val")
    test = synthetic_corpus(
        n_test,
        seed=seed + 2,
        name_pool=TRAIN_NAMES + TEST_NAMES,
        max_references=eval_references,
        id_prefix="test",
    )
    return train, val, test
