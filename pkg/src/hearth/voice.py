"""Keyword command recognition over phoneme sequences.

The pipeline starts where a speech front-end would hand off: an utterance
is a sequence of phoneme symbols (ARPAbet-style, 39-symbol inventory).
Each lexicon word is scored by unit-cost edit distance over phonemes, the
ranked candidates are filtered through a grammar (the set of words
acceptable in context, which is what separates homophones like "write"
and "right"), and an accepted match carries a device command binding that
executes through the appliance registry.

Word-token lookup (`interpret_word`) bypasses matching entirely; it models
per-command buttons where the exact word is already known.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from typing import Iterable, Sequence

from .errors import (
    EmptyUtteranceError,
    LexiconError,
    UnknownPhonemeError,
    UnknownWordError,
)
from .registry import ApplianceRegistry, Power

# 39-symbol ARPAbet phoneme inventory (stress markers stripped).
PHONEME_INVENTORY = frozenset(
    """
    AA AE AH AO AW AY B CH D DH EH ER EY F G HH IH IY JH K L M N NG
    OW OY P R S SH T TH UH UW V W Y Z ZH
    """.split()
)

DEFAULT_CONFIDENCE_THRESHOLD = 0.6


@dataclass(frozen=True)
class Binding:
    channel: int
    state: Power


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    phonemes: tuple[str, ...]
    binding: Binding | None = None  # None marks a non-command word


@dataclass(frozen=True)
class CommandMatch:
    word: str
    distance: int
    confidence: float
    accepted: bool
    binding: Binding | None


@dataclass(frozen=True)
class Rejection:
    reason: str  # "out-of-grammar" | "low-confidence"
    best: CommandMatch | None = None


class Lexicon:
    """Immutable word -> phonemes mapping, case-insensitive on lookup."""

    def __init__(self, entries: Iterable[LexiconEntry]):
        self._entries: list[LexiconEntry] = []
        self._by_word: dict[str, LexiconEntry] = {}
        for entry in entries:
            folded = entry.word.casefold()
            if folded in self._by_word:
                raise LexiconError(f"duplicate word {entry.word!r}")
            self._entries.append(entry)
            self._by_word[folded] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> tuple[LexiconEntry, ...]:
        return tuple(self._entries)

    def get(self, word: str) -> LexiconEntry | None:
        return self._by_word.get(word.strip().casefold())

    def command_entries(self) -> tuple[LexiconEntry, ...]:
        return tuple(e for e in self._entries if e.binding is not None)

    def command_words(self) -> frozenset[str]:
        return frozenset(e.word for e in self.command_entries())


def parse_phonemes(text: str | Sequence[str]) -> tuple[str, ...]:
    """Normalize space-separated symbols or a token sequence; validates
    against the inventory and rejects empty utterances."""
    if isinstance(text, str):
        tokens = text.split()
    else:
        tokens = [str(t) for t in text]
    symbols = tuple(t.upper() for t in tokens)
    if not symbols:
        raise EmptyUtteranceError("utterance must contain at least one phoneme")
    for symbol in symbols:
        if symbol not in PHONEME_INVENTORY:
            raise UnknownPhonemeError(f"unknown phoneme symbol {symbol!r}")
    return symbols


def _parse_binding(text: str, lineno: int) -> Binding:
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise LexiconError(f"line {lineno}: binding must look like [channel,state]")
    parts = [p.strip() for p in body[1:-1].split(",")]
    if len(parts) != 2 or not parts[0].isdigit():
        raise LexiconError(f"line {lineno}: binding must look like [channel,state]")
    try:
        state = Power.parse(parts[1])
    except ValueError:
        raise LexiconError(f"line {lineno}: binding state must be on or off") from None
    return Binding(channel=int(parts[0]), state=state)


def parse_lexicon(lines: Iterable[str]) -> Lexicon:
    """Parse the line-oriented lexicon format.

    Each entry is `word<TAB>PH PH PH[<TAB>[channel,state]]`; blank lines
    and `#` comments are skipped.  Errors name the offending line.
    """
    entries: list[LexiconEntry] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise LexiconError(
                f"line {lineno}: expected word<TAB>phonemes[<TAB>binding], got {line!r}"
            )
        word = fields[0].strip()
        if not word:
            raise LexiconError(f"line {lineno}: empty word")
        if word.casefold() in seen:
            raise LexiconError(f"line {lineno}: duplicate word {word!r}")
        seen.add(word.casefold())
        try:
            phonemes = parse_phonemes(fields[1])
        except UnknownPhonemeError as exc:
            raise UnknownPhonemeError(f"line {lineno}: {exc}") from None
        except EmptyUtteranceError:
            raise LexiconError(f"line {lineno}: empty phoneme sequence") from None
        binding = _parse_binding(fields[2], lineno) if len(fields) == 3 else None
        entries.append(LexiconEntry(word=word, phonemes=phonemes, binding=binding))
    return Lexicon(entries)


def load_lexicon(path: str) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        return parse_lexicon(fh)


def default_lexicon() -> Lexicon:
    """The shipped vocabulary: <Name>On / <Name>Off for the eight default
    appliances, plus the write/right homophone pair."""
    text = resources.files("hearth.data").joinpath("lexicon.txt").read_text("utf-8")
    return parse_lexicon(text.splitlines())


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Unit-cost Levenshtein distance over symbol sequences."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, sym_a in enumerate(a, start=1):
        current = [i]
        for j, sym_b in enumerate(b, start=1):
            cost = 0 if sym_a == sym_b else 1
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost))
        previous = current
    return previous[-1]


def recognize(utterance: str | Sequence[str], lexicon: Lexicon) -> list[CommandMatch]:
    """Score every lexicon entry against the utterance.

    Pure and deterministic: results are sorted by (distance, word), and
    confidence is 1 - distance / max(|utterance|, |entry|).  `accepted`
    stays False until disambiguation.
    """
    symbols = parse_phonemes(utterance)
    matches = []
    for entry in lexicon.entries():
        distance = edit_distance(symbols, entry.phonemes)
        confidence = 1.0 - distance / max(len(symbols), len(entry.phonemes))
        matches.append(
            CommandMatch(
                word=entry.word,
                distance=distance,
                confidence=confidence,
                accepted=False,
                binding=entry.binding,
            )
        )
    matches.sort(key=lambda m: (m.distance, m.word))
    return matches


def disambiguate(
    matches: Sequence[CommandMatch],
    grammar: Iterable[str],
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> CommandMatch | Rejection:
    """Pick the best in-grammar match, or explain the rejection.

    The winner is the first ranked match whose word is in the grammar and
    whose confidence clears the threshold.  `accepted` is set only when
    the winner also carries a command binding.
    """
    allowed = {w.casefold() for w in grammar}
    best_in_grammar: CommandMatch | None = None
    for match in matches:
        if match.word.casefold() not in allowed:
            continue
        if best_in_grammar is None:
            best_in_grammar = match
        if match.confidence >= threshold:
            return replace(match, accepted=match.binding is not None)
    if best_in_grammar is None:
        return Rejection(reason="out-of-grammar", best=matches[0] if matches else None)
    return Rejection(reason="low-confidence", best=best_in_grammar)


def interpret_word(text: str, lexicon: Lexicon) -> Binding:
    """Exact case-insensitive word lookup; the per-command-button path."""
    entry = lexicon.get(text)
    if entry is None:
        raise UnknownWordError(f"unknown command word: {text!r}")
    if entry.binding is None:
        raise UnknownWordError(f"{entry.word!r} is not bound to a command")
    return entry.binding


def execute(binding: Binding, registry: ApplianceRegistry) -> int:
    """Apply a command binding; returns the new latch byte."""
    return registry.set_state(binding.channel, binding.state, source="voice")
