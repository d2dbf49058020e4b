"""
Synthetic German hotel-review data for desk-scale experiments.

Positives mention other guests by demonym, slang or a misspelled demonym.
Negatives mention restaurants, cuisine or staff with the same words, or no
nationality at all. A set of paired templates share their bag of words and
differ only in word order, so only order-aware models can separate them.

Everything is drawn from ``numpy.random.default_rng(seed)``.
"""

from __future__ import annotations

import datetime
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from guestmix._config import DEFAULT_SAMPLE_RATIO, DEFAULT_SEED, FIXTURE_DIM
from guestmix.core.corpus import Review, make_sentence, tokenize
from guestmix.core.dataset import LabeledSentence
from guestmix.core.embeddings import EmbeddingTable
from guestmix.core.gazetteer import KIND_ADJECTIVE, KIND_DEMONYM, SOURCE_SEED, Gazetteer, match, term_key
from guestmix.utils import get_logger
from guestmix.utils.io_utils import write_tsv

logger = get_logger(__name__)

# surface, country
SLANG_TERMS: Tuple[Tuple[str, str], ...] = (
    ("Amis", "US"),
    ("Tommys", "GB"),
    ("Piefkes", "DE"),
    ("Ösis", "AT"),
    ("Aussies", "AU"),
    ("Kiwis", "NZ"),
)

LOCAL_WORD = "Einheimische"

GUEST_TEMPLATES = (
    "Das Hotel war komplett voll mit {dative}.",
    "Im Hotel waren sehr viele {plural} untergebracht.",
    "Die {plural} am Nachbartisch waren sehr laut.",
    "Am Pool lagen fast nur {plural}.",
    "Beim Frühstück saßen viele {plural} neben uns.",
    "Die meisten Gäste waren {plural}.",
    "Unsere Zimmernachbarn waren nette {plural}.",
    "Die {plural} sind wieder negativ aufgefallen.",
    "Es gab leider viele betrunkene {plural} an der Bar.",
    "Das Publikum bestand überwiegend aus {dative}.",
)

RESTAURANT_TEMPLATES = (
    "Beim {singular} war das Essen fantastisch.",
    "Abends gingen wir zum {singular} um die Ecke.",
    "Im Zentrum gibt es auch Pubs, Pizza, {plural} etc.",
    "Der Kellner war ein freundlicher {singular}.",
    "Gleich gegenüber ist ein guter {singular} mit Terrasse.",
    "Richtung Altstadt gibt es viele {plural} die preiswert sind.",
)

CUISINE_TEMPLATES = (
    "Die Küche ist typisch {adjective}.",
    "Das Frühstück war eher {adjective}.",
    "Der Wein an der Bar war {adjective}.",
)

NEUTRAL_TEMPLATES = (
    "Das Zimmer war sauber und ruhig.",
    "Das Frühstück war reichhaltig.",
    "Die Lage ist perfekt für Ausflüge.",
    "Das Personal war sehr freundlich.",
    "Der Pool war leider kalt.",
    "Parkplätze sind knapp.",
    "Wir kommen gerne wieder.",
    "Das WLAN funktionierte kaum.",
    "Die Betten waren zu weich.",
    "Der Blick vom Balkon war traumhaft.",
    "Die Rezeption war rund um die Uhr besetzt.",
    "Das Badezimmer müsste renoviert werden.",
)

# (guest order, staff order): identical bags of words
ORDER_PAIRS = (
    ("Die Gäste waren {plural} und das Personal nicht.", "Das Personal waren {plural} und die Gäste nicht."),
    (
        "Am Pool lagen {plural} und in der Küche kochten {local}.",
        "Am Pool lagen {local} und in der Küche kochten {plural}.",
    ),
    ("Zu Gast waren {plural}, gekocht haben {local}.", "Zu Gast waren {local}, gekocht haben {plural}."),
)

POSITIVE_MIX = (("plain", 0.55), ("slang", 0.15), ("typo", 0.15), ("order", 0.15))
NEGATIVE_MIX = (("restaurant", 0.3), ("cuisine", 0.1), ("neutral", 0.3), ("order", 0.2), ("typo", 0.1))

SEMANTIC_CLASSES: Dict[str, Tuple[str, ...]] = {
    "food": (
        "essen", "frühstück", "küche", "pizza", "wein", "kellner",
        "koch", "kochten", "gekocht", "restaurant", "pubs", "terrasse",
    ),
    "place": (
        "hotel", "zimmer", "pool", "bar", "balkon", "zentrum",
        "altstadt", "ecke", "lage", "rezeption", "badezimmer",
    ),
    "people": ("gäste", "gast", "personal", "publikum", "zimmernachbarn", "nachbartisch", "einheimische"),
}


@dataclass(frozen=True)
class DemonymForms:
    country: str
    singular: str
    plural: str
    dative: str


def demonym_forms(g: Gazetteer) -> List[DemonymForms]:
    forms = []
    for term in g.by_source(SOURCE_SEED):
        if term.kind != KIND_DEMONYM or " " in term.key:
            continue
        surface = term.surface
        if surface.endswith("er"):
            forms.append(DemonymForms(term.country, surface, surface, surface + "n"))
        elif surface.endswith("e"):
            forms.append(DemonymForms(term.country, surface, surface + "n", surface + "n"))
    return sorted(forms, key=lambda f: f.singular)


def adjectives(g: Gazetteer) -> List[str]:
    return sorted(t.surface for t in g.by_source(SOURCE_SEED) if t.kind == KIND_ADJECTIVE)


def _pick(rng: np.random.Generator, options: Sequence):
    return options[int(rng.integers(len(options)))]


def _pick_mix(rng: np.random.Generator, mix) -> str:
    names = [name for name, _ in mix]
    weights = np.array([weight for _, weight in mix])
    return names[int(rng.choice(len(names), p=weights / weights.sum()))]


def make_typo(word: str, rng: np.random.Generator, known: Optional[set] = None) -> str:
    """Misspell ``word``: collapse a double letter, swap two inner letters or drop one.

    The result differs from ``word`` and, if ``known`` is given, its folded
    key is not in ``known``.
    """
    known = known or set()
    candidates = []
    for i in range(1, len(word) - 1):
        if word[i] == word[i + 1]:
            candidates.append(word[:i] + word[i + 1:])
    for i in range(1, len(word) - 2):
        if word[i] != word[i + 1]:
            candidates.append(word[:i] + word[i + 1] + word[i] + word[i + 2:])
    for i in range(1, len(word) - 1):
        candidates.append(word[:i] + word[i + 1:])
    candidates = sorted({c for c in candidates if c != word and term_key(c) and term_key(c) not in known})
    if not candidates:
        return word + word[-1]
    return _pick(rng, candidates)


# ═══════════════════════════════════════════════════════════════
#  Sentences
# ═══════════════════════════════════════════════════════════════

class SentenceFactory:
    """Draws labeled sentence texts from the template families."""

    def __init__(self, g: Gazetteer, rng: np.random.Generator) -> None:
        self.g = g
        self.rng = rng
        self.forms = demonym_forms(g)
        self.adjectives = adjectives(g)
        if not self.forms or not self.adjectives:
            raise ValueError("synthetic data needs demonyms and adjectives in the lexicon")
        self.known = {term.key for term in g.terms}

    def _fill(self, template: str, forms: DemonymForms) -> str:
        return template.format(
            singular=forms.singular,
            plural=forms.plural,
            dative=forms.dative,
            adjective=_pick(self.rng, self.adjectives),
            local=LOCAL_WORD,
        )

    def _typo_forms(self, forms: DemonymForms) -> DemonymForms:
        return DemonymForms(
            forms.country,
            make_typo(forms.singular, self.rng, self.known),
            make_typo(forms.plural, self.rng, self.known),
            make_typo(forms.dative, self.rng, self.known),
        )

    def positive(self) -> Tuple[str, str]:
        variant = _pick_mix(self.rng, POSITIVE_MIX)
        forms = _pick(self.rng, self.forms)
        if variant == "slang":
            slang, country = _pick(self.rng, SLANG_TERMS)
            forms = DemonymForms(country, slang, slang, slang)
        elif variant == "typo":
            forms = self._typo_forms(forms)
        if variant == "order":
            return self._fill(_pick(self.rng, ORDER_PAIRS)[0], forms), variant
        return self._fill(_pick(self.rng, GUEST_TEMPLATES), forms), variant

    def negative(self) -> Tuple[str, str]:
        variant = _pick_mix(self.rng, NEGATIVE_MIX)
        forms = _pick(self.rng, self.forms)
        if variant == "restaurant":
            return self._fill(_pick(self.rng, RESTAURANT_TEMPLATES), forms), variant
        if variant == "typo":
            return self._fill(_pick(self.rng, RESTAURANT_TEMPLATES), self._typo_forms(forms)), variant
        if variant == "cuisine":
            return self._fill(_pick(self.rng, CUISINE_TEMPLATES), forms), variant
        if variant == "order":
            return self._fill(_pick(self.rng, ORDER_PAIRS)[1], forms), variant
        return _pick(self.rng, NEUTRAL_TEMPLATES), variant


def generate_labeled(
    n: int,
    seed: int = DEFAULT_SEED,
    g: Optional[Gazetteer] = None,
    ratio: float = DEFAULT_SAMPLE_RATIO,
    *,
    max_attempts: int = 200,
) -> List[LabeledSentence]:
    """``n`` distinct labeled sentences, ``round(ratio*n)`` of them positive.

    ``has_term`` reflects whether the sentence matches ``g``.
    """
    if g is None:
        raise ValueError("a gazetteer is required")
    rng = np.random.default_rng(seed)
    factory = SentenceFactory(g, rng)
    n_pos = int(round(ratio * n))
    wanted = [True] * n_pos + [False] * (n - n_pos)
    seen: set = set()
    items: List[LabeledSentence] = []
    for position, gold in enumerate(wanted):
        draw: Callable[[], Tuple[str, str]] = factory.positive if gold else factory.negative
        for _ in range(max_attempts):
            text, _variant = draw()
            sentence = make_sentence(text, review_id=f"synth-{position:05d}", index=0)
            if sentence.sentence_id not in seen:
                break
        else:
            raise ValueError(f"could not draw {n} distinct sentences; templates exhausted")
        seen.add(sentence.sentence_id)
        items.append(LabeledSentence(sentence, has_term=bool(match(g, sentence)), gold=gold))
    order = rng.permutation(len(items))
    return [items[int(i)] for i in order]


def generate_corpus(
    n_reviews: int,
    seed: int = DEFAULT_SEED,
    g: Optional[Gazetteer] = None,
    *,
    n_businesses: int = 5,
    positive_rate: float = 0.25,
    start: datetime.date = datetime.date(2018, 1, 1),
    days: int = 730,
) -> List[Review]:
    """Reviews of 2-5 sentences each, spread over businesses and dates."""
    if g is None:
        raise ValueError("a gazetteer is required")
    rng = np.random.default_rng(seed)
    factory = SentenceFactory(g, rng)
    reviews = []
    for number in range(n_reviews):
        sentences = []
        for _ in range(int(rng.integers(2, 6))):
            text, _variant = factory.positive() if rng.random() < positive_rate else factory.negative()
            sentences.append(text)
        reviews.append(Review(
            review_id=f"r{number:06d}",
            business_id=f"b{int(rng.integers(n_businesses)):03d}",
            text=" ".join(sentences),
            date=start + datetime.timedelta(days=int(rng.integers(days))),
        ))
    return reviews


def generate_locations(business_ids: Sequence[str], seed: int = DEFAULT_SEED) -> Dict[str, Tuple[float, float]]:
    """Coordinates inside the Alpine / central European box."""
    rng = np.random.default_rng(seed)
    return {
        business_id: (round(float(rng.uniform(46.0, 55.0)), 6), round(float(rng.uniform(6.0, 17.0)), 6))
        for business_id in sorted(set(business_ids))
    }


# ═══════════════════════════════════════════════════════════════
#  Embeddings
# ═══════════════════════════════════════════════════════════════

def template_vocabulary() -> List[str]:
    texts = [*GUEST_TEMPLATES, *RESTAURANT_TEMPLATES, *CUISINE_TEMPLATES, *NEUTRAL_TEMPLATES]
    texts += [t for pair in ORDER_PAIRS for t in pair]
    words = {token.surface for text in texts for token in tokenize(text.format(
        singular="", plural="", dative="", adjective="", local=LOCAL_WORD,
    ))}
    return sorted(words)


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def generate_embeddings(
    g: Gazetteer,
    words: Sequence[str] = (),
    dim: int = FIXTURE_DIM,
    seed: int = DEFAULT_SEED,
    *,
    noise: float = 0.05,
) -> EmbeddingTable:
    """Toy word vectors with planted structure.

    Nationality terms lie along a shared direction plus a per-country offset;
    slang sits next to its country; other words cluster by semantic class.
    Misspellings are never included.
    """
    rng = np.random.default_rng(seed)
    nationality = _unit(rng, dim)
    countries = sorted({t.country for t in g.terms} | {c for _, c in SLANG_TERMS})
    country_dir = {c: _unit(rng, dim) for c in countries}
    class_dir = {name: _unit(rng, dim) for name in sorted(SEMANTIC_CLASSES)}
    class_of = {word: name for name, members in SEMANTIC_CLASSES.items() for word in members}

    rows: Dict[str, np.ndarray] = {}
    folded: set = set()

    def add(word: str, center: np.ndarray, scale: float) -> None:
        if word.casefold() in folded:
            return
        folded.add(word.casefold())
        rows[word] = center + scale * rng.normal(size=dim)

    for term in sorted(g.terms, key=lambda t: t.surface):
        add(term.surface, nationality + 0.8 * country_dir[term.country], noise)
    for surface, country in SLANG_TERMS:
        add(surface, nationality + 0.8 * country_dir[country], noise)
    for word in sorted(g.veto):
        add(word, nationality, 3 * noise)
    for word in [*template_vocabulary(), *words]:
        name = class_of.get(word.casefold())
        center = class_dir[name] if name else _unit(rng, dim)
        add(word, center, 0.3 if name else noise)

    ordered = sorted(rows)
    table = EmbeddingTable(ordered, np.vstack([rows[w] for w in ordered]))
    logger.info("Generated %d synthetic vectors (dim %d)", len(table), dim)
    return table


# ═══════════════════════════════════════════════════════════════
#  Annotators
# ═══════════════════════════════════════════════════════════════

def generate_annotations(
    labeled: Sequence[LabeledSentence],
    n_annotators: int = 3,
    flip_rate: float = 0.05,
    seed: int = DEFAULT_SEED,
) -> Dict[str, List[Tuple[str, bool]]]:
    """Per-annotator ``(sentence_id, label)`` lists; each label flips with ``flip_rate``."""
    if n_annotators < 1:
        raise ValueError("need at least one annotator")
    if not 0.0 <= flip_rate <= 1.0:
        raise ValueError("flip_rate must be in [0, 1]")
    rng = np.random.default_rng(seed)
    annotations: Dict[str, List[Tuple[str, bool]]] = {}
    for k in range(n_annotators):
        name = f"annotator{k + 1}"
        flips = rng.random(len(labeled)) < flip_rate
        annotations[name] = [
            (item.sentence_id, bool(item.gold) != bool(flip))
            for item, flip in zip(labeled, flips)
        ]
    return annotations


def write_annotation_files(directory: str, annotations: Dict[str, List[Tuple[str, bool]]]) -> List[str]:
    paths = []
    for name in sorted(annotations):
        path = os.path.join(directory, f"{name}.tsv")
        rows = [(sentence_id, name, int(label)) for sentence_id, label in annotations[name]]
        write_tsv(path, rows, header=("sentence_id", "annotator_id", "label"))
        paths.append(path)
    return paths


__all__ = [
    "SLANG_TERMS",
    "SentenceFactory",
    "make_typo",
    "generate_labeled",
    "generate_corpus",
    "generate_locations",
    "generate_embeddings",
    "generate_annotations",
    "write_annotation_files",
    "template_vocabulary",
]
