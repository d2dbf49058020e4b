"""
Nationality lexicon and token-level multi-pattern matching.

Terms are matched on whole case-folded tokens: the automaton runs over the
sentence's folded tokens joined by single spaces and padded with a space on
each side, and every key is padded the same way, so ``ami`` can never match
inside ``familie``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import ahocorasick
import pycountry

from guestmix._config import DEFAULT_KNN_K, DEFAULT_MIN_SIM, TERM_KINDS, TERM_SOURCES
from guestmix.core.corpus import Sentence, Token, fold_tokens, tokenize
from guestmix.core.embeddings import EmbeddingTable, knn
from guestmix.errors import LexiconError
from guestmix.utils import get_logger
from guestmix.utils.io_utils import atomic_write_text, iter_tsv, read_word_list

logger = get_logger(__name__)

SOURCE_SEED, SOURCE_INFLECTED, SOURCE_EXPANDED = TERM_SOURCES
KIND_DEMONYM, KIND_ADJECTIVE, KIND_SLANG = TERM_KINDS


def is_country_code(code: str) -> bool:
    if not isinstance(code, str) or len(code) != 2 or not code.isupper():
        return False
    try:
        return pycountry.countries.get(alpha_2=code) is not None
    except KeyError:
        return False


def term_key(surface: str) -> str:
    """Folded token sequence of a surface, space-joined."""
    return " ".join(fold_tokens(surface))


@dataclass(frozen=True)
class NationalityTerm:
    surface: str
    country: str
    kind: str = KIND_DEMONYM
    source: str = SOURCE_SEED

    def __post_init__(self) -> None:
        if not self.surface or not self.surface.strip():
            raise ValueError("surface must be non-empty")
        if not term_key(self.surface):
            raise ValueError(f"surface '{self.surface}' contains no letters")
        if not is_country_code(self.country):
            raise ValueError(f"'{self.country}' is not an ISO 3166-1 alpha-2 code")
        if self.kind not in TERM_KINDS:
            raise ValueError(f"unknown kind '{self.kind}'")
        if self.source not in TERM_SOURCES:
            raise ValueError(f"unknown source '{self.source}'")

    @property
    def key(self) -> str:
        return term_key(self.surface)

    @property
    def length(self) -> int:
        return len(self.key.split(" "))


@dataclass(frozen=True)
class MatchSpan:
    term: NationalityTerm
    token_start: int
    token_end: int
    char_start: int
    char_end: int

    def to_dict(self) -> dict:
        return {
            "surface": self.term.surface,
            "country": self.term.country,
            "token_start": self.token_start,
            "token_end": self.token_end,
            "char_start": self.char_start,
            "char_end": self.char_end,
        }


# ═══════════════════════════════════════════════════════════════
#  Matcher
# ═══════════════════════════════════════════════════════════════

class TermMatcher:
    """Aho-Corasick automaton over space-padded folded token sequences."""

    def __init__(self, keys: Iterable[str]) -> None:
        self._automaton = ahocorasick.Automaton()
        self.keys = frozenset(k for k in keys if k)
        for key in sorted(self.keys):
            padded = f" {key} "
            self._automaton.add_word(padded, (key, key.count(" ") + 1, len(padded)))
        if self.keys:
            self._automaton.make_automaton()

    def __len__(self) -> int:
        return len(self.keys)

    def find_all(self, folded: Sequence[str]) -> List[Tuple[int, int, str]]:
        """Every ``(token_start, token_end, key)`` occurrence, overlaps included."""
        if not self.keys or not folded:
            return []
        starts: Dict[int, int] = {}
        position = 0
        for index, token in enumerate(folded):
            starts[position] = index
            position += len(token) + 1
        haystack = " " + " ".join(folded) + " "

        found = []
        for end_index, (key, n_tokens, padded_len) in self._automaton.iter(haystack):
            token_start = starts[end_index - padded_len + 1]
            found.append((token_start, token_start + n_tokens, key))
        found.sort(key=lambda item: (item[0], item[1]))
        return found


def build_matcher(terms: Iterable[NationalityTerm]) -> TermMatcher:
    return TermMatcher(term.key for term in terms)


def naive_find_all(keys: Iterable[str], folded: Sequence[str]) -> List[Tuple[int, int, str]]:
    """Reference scan: compare every key against every token window."""
    found = []
    split_keys = [(key, key.split(" ")) for key in set(keys) if key]
    for start in range(len(folded)):
        for key, parts in split_keys:
            end = start + len(parts)
            if end <= len(folded) and list(folded[start:end]) == parts:
                found.append((start, end, key))
    found.sort(key=lambda item: (item[0], item[1]))
    return found


def resolve_overlaps(found: Iterable[Tuple[int, int, str]]) -> List[Tuple[int, int, str]]:
    """Left to right; at a shared start the longest match wins."""
    chosen: List[Tuple[int, int, str]] = []
    last_end = 0
    for start, end, key in sorted(found, key=lambda item: (item[0], -(item[1] - item[0]))):
        if start >= last_end:
            chosen.append((start, end, key))
            last_end = end
    return chosen


# ═══════════════════════════════════════════════════════════════
#  Gazetteer
# ═══════════════════════════════════════════════════════════════

class Gazetteer:
    """Immutable term set with its compiled matcher.

    Mutating operations return a new ``Gazetteer``; the automaton always
    reflects ``terms`` minus ``veto``.
    """

    def __init__(self, terms: Iterable[NationalityTerm] = (), veto: Iterable[str] = ()) -> None:
        self._by_key: Dict[str, NationalityTerm] = {}
        for term in terms:
            existing = self._by_key.get(term.key)
            if existing is not None:
                raise LexiconError(f"duplicate surface '{term.surface}' (already '{existing.surface}')")
            self._by_key[term.key] = term
        self.veto = frozenset(term_key(surface) for surface in veto if term_key(surface))
        self.matcher = build_matcher(self.active_terms)

    @property
    def terms(self) -> Tuple[NationalityTerm, ...]:
        return tuple(self._by_key.values())

    @property
    def active_terms(self) -> List[NationalityTerm]:
        return [term for key, term in self._by_key.items() if key not in self.veto]

    def __len__(self) -> int:
        return len(self._by_key)

    def __iter__(self) -> Iterator[NationalityTerm]:
        return iter(self._by_key.values())

    def __contains__(self, surface: str) -> bool:
        return term_key(surface) in self._by_key

    def get(self, surface: str) -> Optional[NationalityTerm]:
        return self._by_key.get(term_key(surface))

    def by_source(self, source: str) -> List[NationalityTerm]:
        return [term for term in self._by_key.values() if term.source == source]

    def with_terms(self, extra: Iterable[NationalityTerm]) -> "Gazetteer":
        return Gazetteer([*self._by_key.values(), *extra], self.veto)

    def with_veto(self, veto: Iterable[str]) -> "Gazetteer":
        return Gazetteer(self._by_key.values(), set(self.veto) | {term_key(v) for v in veto})

    def with_inflections(self) -> "Gazetteer":
        known = set(self._by_key)
        variants: List[NationalityTerm] = []
        for term in list(self._by_key.values()):
            for variant in inflect(term, known):
                known.add(variant.key)
                variants.append(variant)
        return self.with_terms(variants)

    def countries(self) -> List[str]:
        return sorted({term.country for term in self._by_key.values()})

    def __repr__(self) -> str:
        counts = Counter(term.source for term in self._by_key.values())
        parts = ", ".join(f"{source}={counts[source]}" for source in TERM_SOURCES if counts[source])
        return f"Gazetteer({len(self)} terms: {parts or 'empty'}, veto={len(self.veto)})"


def _sentence_tokens(sentence: Union[Sentence, str, Sequence[Token]]) -> Sequence[Token]:
    if isinstance(sentence, Sentence):
        return sentence.tokens
    if isinstance(sentence, str):
        return tokenize(sentence)
    return sentence


def match(g: Gazetteer, sentence: Union[Sentence, str, Sequence[Token]]) -> List[MatchSpan]:
    """Non-overlapping spans, left to right, longest first on overlap."""
    tokens = _sentence_tokens(sentence)
    found = g.matcher.find_all([token.folded for token in tokens])
    spans = []
    for start, end, key in resolve_overlaps(found):
        spans.append(MatchSpan(
            term=g._by_key[key],
            token_start=start,
            token_end=end,
            char_start=tokens[start].start,
            char_end=tokens[end - 1].end,
        ))
    return spans


# ═══════════════════════════════════════════════════════════════
#  Lexicon files
# ═══════════════════════════════════════════════════════════════

def load_lexicon(path: str, veto: Iterable[str] = ()) -> Gazetteer:
    """Read ``surface<TAB>country<TAB>kind[<TAB>source]`` rows.

    Every row is validated first; all duplicate and invalid rows are reported
    together in one ``LexiconError``.
    """
    terms: List[NationalityTerm] = []
    first_line: Dict[str, Tuple[int, str]] = {}
    problems: List[str] = []
    for line_number, fields in iter_tsv(path, min_columns=3):
        surface, country, kind = fields[0], fields[1].upper(), fields[2].lower()
        source = fields[3].lower() if len(fields) > 3 and fields[3] else SOURCE_SEED
        try:
            term = NationalityTerm(surface=surface, country=country, kind=kind, source=source)
        except ValueError as exc:
            problems.append(f"line {line_number}: {exc}")
            continue
        previous = first_line.get(term.key)
        if previous is not None:
            problems.append(
                f"line {line_number}: duplicate surface '{surface}' "
                f"(first seen as '{previous[1]}' on line {previous[0]})"
            )
            continue
        first_line[term.key] = (line_number, surface)
        terms.append(term)
    if problems:
        raise LexiconError("; ".join(problems), path=path)
    logger.info("Loaded %d lexicon terms from %s", len(terms), path)
    return Gazetteer(terms, veto)


def write_lexicon(g: Gazetteer, path: str) -> None:
    lines = ["# surface\tcountry\tkind\tsource"]
    lines.extend(f"{t.surface}\t{t.country}\t{t.kind}\t{t.source}" for t in g.terms)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_veto(path: Optional[str]) -> frozenset:
    if not path:
        return frozenset()
    return frozenset(read_word_list(path))


def build_gazetteer(lexicon_path: str, veto_path: Optional[str] = None, *, inflections: bool = True) -> Gazetteer:
    g = load_lexicon(lexicon_path, load_veto(veto_path))
    return g.with_inflections() if inflections else g


# ═══════════════════════════════════════════════════════════════
#  Inflection and expansion
# ═══════════════════════════════════════════════════════════════

_SUFFIX_RULES = (
    ("er", ("n", "in", "innen", "s")),
    ("e", ("n",)),
)


def inflect(term: NationalityTerm, existing: Iterable[str] = ()) -> List[NationalityTerm]:
    """Dative plural, feminine and colloquial genitive variants of a demonym.

    Adjectives pass through unchanged. Variants whose folded form is already in
    ``existing`` (or equal to the term itself) are dropped.
    """
    if term.kind == KIND_ADJECTIVE or " " in term.key:
        return []
    known = set(existing) | {term.key}
    variants: List[NationalityTerm] = []
    lowered = term.surface.casefold()
    for ending, suffixes in _SUFFIX_RULES:
        if not lowered.endswith(ending):
            continue
        for suffix in suffixes:
            surface = term.surface + suffix
            key = term_key(surface)
            if key in known:
                continue
            known.add(key)
            variants.append(NationalityTerm(surface, term.country, term.kind, SOURCE_INFLECTED))
        break
    return variants


@dataclass(frozen=True)
class ExpansionRow:
    seed: str
    neighbor: str
    similarity: Optional[float]
    accepted: bool
    reason: str

    def to_fields(self) -> List[str]:
        sim = "" if self.similarity is None else f"{self.similarity:.6f}"
        return [self.seed, self.neighbor, sim, "yes" if self.accepted else "no", self.reason]


EXPANSION_REPORT_HEADER = ("seed", "neighbor", "similarity", "accepted", "reason")


def _is_plain_word(word: str) -> bool:
    tokens = tokenize(word)
    return len(tokens) == 1 and tokens[0].surface == word


def expand_with_knn(
    g: Gazetteer,
    e: EmbeddingTable,
    k: int = DEFAULT_KNN_K,
    min_sim: float = DEFAULT_MIN_SIM,
    veto: Iterable[str] = (),
) -> Tuple[Gazetteer, List[ExpansionRow]]:
    """Add the ``k`` nearest neighbours of every seed term as slang terms.

    Neighbours inherit the seed's country. Seeds missing from the table get a
    report row and are otherwise skipped.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    g = g.with_veto(veto) if veto else g
    if k == 0:
        return g, []

    known = {term.key for term in g.terms}
    added: List[NationalityTerm] = []
    report: List[ExpansionRow] = []
    for seed in g.by_source(SOURCE_SEED):
        if e.index_of(seed.surface) is None:
            report.append(ExpansionRow(seed.surface, "", None, False, "seed_not_in_vocab"))
            continue
        for neighbor, similarity in knn(e, seed.surface, k):
            key = term_key(neighbor)
            if similarity < min_sim:
                reason = "below_min_sim"
            elif not _is_plain_word(neighbor):
                reason = "not_a_word"
            elif key in g.veto:
                reason = "vetoed"
            elif key in known:
                reason = "existing"
            else:
                reason = ""
            accepted = not reason
            report.append(ExpansionRow(seed.surface, neighbor, similarity, accepted, reason or "added"))
            if accepted:
                known.add(key)
                added.append(NationalityTerm(neighbor, seed.country, KIND_SLANG, SOURCE_EXPANDED))

    missing = sum(1 for row in report if row.reason == "seed_not_in_vocab")
    if missing:
        logger.warning("%d seed term(s) not in the embedding vocabulary", missing)
    logger.info("k-NN expansion added %d term(s) from %d seed(s)", len(added), len(g.by_source(SOURCE_SEED)))
    return g.with_terms(added), report


# ═══════════════════════════════════════════════════════════════
#  Corpus filtering
# ═══════════════════════════════════════════════════════════════

@dataclass
class FilterStats:
    total: int = 0
    with_terms: int = 0
    without_terms: int = 0
    term_counts: Dict[str, int] = field(default_factory=dict)
    country_counts: Dict[str, int] = field(default_factory=dict)

    @property
    def occurrences(self) -> int:
        return sum(self.term_counts.values())

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "with_terms": self.with_terms,
            "without_terms": self.without_terms,
            "occurrences": self.occurrences,
            "term_counts": dict(sorted(self.term_counts.items())),
            "country_counts": dict(sorted(self.country_counts.items())),
        }


def filter_corpus(g: Gazetteer, sentences: Iterable[Sentence]) -> Tuple[List[Sentence], List[Sentence], FilterStats]:
    """Partition sentences by whether they contain at least one term."""
    with_terms: List[Sentence] = []
    without_terms: List[Sentence] = []
    term_counts: Counter = Counter()
    country_counts: Counter = Counter()
    for sentence in sentences:
        spans = match(g, sentence)
        if spans:
            with_terms.append(sentence)
            term_counts.update(span.term.surface for span in spans)
            country_counts.update(span.term.country for span in spans)
        else:
            without_terms.append(sentence)
    stats = FilterStats(
        total=len(with_terms) + len(without_terms),
        with_terms=len(with_terms),
        without_terms=len(without_terms),
        term_counts=dict(term_counts),
        country_counts=dict(country_counts),
    )
    logger.info("Filtered %d sentences: %d with terms, %d without", stats.total, stats.with_terms, stats.without_terms)
    return with_terms, without_terms, stats


__all__ = [
    "NationalityTerm",
    "MatchSpan",
    "Gazetteer",
    "TermMatcher",
    "ExpansionRow",
    "FilterStats",
    "EXPANSION_REPORT_HEADER",
    "build_matcher",
    "naive_find_all",
    "resolve_overlaps",
    "match",
    "load_lexicon",
    "write_lexicon",
    "load_veto",
    "build_gazetteer",
    "inflect",
    "expand_with_knn",
    "filter_corpus",
    "is_country_code",
    "term_key",
]
