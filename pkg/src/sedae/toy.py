"""Synthetic two-style template corpus for desk-scale end-to-end runs.

Sentences are drawn from a small set of templates with content slots and
style slots. Each positive style word has a fixed negative counterpart, so
every sentence has an exact gold transfer (used as its reference).
"""

from pathlib import Path

import numpy as np

STYLES = ("pos", "neg")

STYLE_PAIRS = [
    ("great", "terrible"),
    ("delicious", "disgusting"),
    ("friendly", "rude"),
    ("amazing", "awful"),
    ("excellent", "horrible"),
    ("fresh", "stale"),
    ("wonderful", "bad"),
    ("perfect", "mediocre"),
    ("fantastic", "nasty"),
    ("lovely", "bland"),
    ("helpful", "useless"),
    ("tasty", "gross"),
]
VERB_PAIRS = [("love", "hate"), ("recommend", "avoid"), ("enjoy", "regret")]

FOODS = """pizza pasta burger salad soup steak sushi tacos curry noodles bread coffee tea
dessert cake pie sandwich fries chicken fish rice beans eggs pancakes waffles bagel wings
ribs shrimp lobster pork lamb tofu ramen pho burrito nachos salsa guacamole hummus falafel
kebab gyro dumplings bacon sausage ham turkey brisket oysters crab salmon tuna cod scallops
calamari risotto lasagna ravioli gnocchi omelette toast muffin croissant donut brownie
cookies cheesecake tiramisu gelato smoothie latte espresso lemonade cocktail wine beer
cider chowder chili quesadilla enchiladas""".split()
PLACES = """restaurant cafe bar diner bakery bistro place spot shop joint buffet pub kitchen
grill deli tavern brewery pizzeria steakhouse cantina trattoria eatery lounge canteen
teahouse creamery noodlehouse""".split()
PEOPLE = """waiter waitress staff owner chef manager bartender host server cashier cook barista
hostess busboy sommelier baker dishwasher runner driver crew""".split()
THINGS = """service food menu music decor atmosphere price portion patio view table seating
lighting parking bathroom entrance wifi playlist napkins silverware plates booth counter
terrace garden window ceiling carpet floor sign website delivery takeout reservation
brunch lunch dinner breakfast""".split()
TIMES = """today yesterday tonight again recently lately sometimes often daily weekly""".split()

TEMPLATES = [
    "the {food} was {adj} .",
    "the {thing} here is {adj} .",
    "our {person} was {adj} and the {food} was {adj} .",
    "i {verb} this {place} .",
    "i {verb} the {food} at this {place} .",
    "the {person} at the {place} was {adj} {time} .",
    "we had the {food} and it was {adj} .",
    "this {place} has {adj} {food} .",
    "the {thing} and the {thing} were {adj} .",
    "i would {verb} the {food} {time} .",
    "my {food} was {adj} but the {thing} was {adj} .",
    "{adj} {food} and {adj} {thing} .",
]


def _fill(template, style_idx, rng):
    out_src, out_ref = [], []
    for tok in template.split():
        if tok.startswith("{") and tok.endswith("}"):
            slot = tok[1:-1]
            if slot in ("adj", "verb"):
                pairs = STYLE_PAIRS if slot == "adj" else VERB_PAIRS
                pair = pairs[rng.integers(len(pairs))]
                out_src.append(pair[style_idx])
                out_ref.append(pair[1 - style_idx])
            else:
                pool = {"food": FOODS, "place": PLACES, "person": PEOPLE,
                        "thing": THINGS, "time": TIMES}[slot]
                w = pool[rng.integers(len(pool))]
                out_src.append(w)
                out_ref.append(w)
        else:
            out_src.append(tok)
            out_ref.append(tok)
    return " ".join(out_src), " ".join(out_ref)


def generate(n, style, seed):
    """``n`` (sentence, gold transfer) pairs of the given style."""
    style_idx = STYLES.index(style)
    rng = np.random.default_rng([seed, style_idx])
    return [_fill(TEMPLATES[rng.integers(len(TEMPLATES))], style_idx, rng) for _ in range(n)]


def write_toy_corpus(out_dir, seed=0, n_train=2000, n_dev=200, n_test=200):
    """Write ``<split>.<style>`` files plus ``test.<style>.ref0`` / ``dev.<style>.ref0``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sizes = {"train": n_train, "dev": n_dev, "test": n_test}
    for k, split in enumerate(("train", "dev", "test")):
        for style in STYLES:
            pairs = generate(sizes[split], style, seed * 1000 + k)
            (out / f"{split}.{style}").write_text("".join(s + "\n" for s, _ in pairs), encoding="utf-8")
            if split != "train":
                (out / f"{split}.{style}.ref0").write_text("".join(r + "\n" for _, r in pairs), encoding="utf-8")
    return out
