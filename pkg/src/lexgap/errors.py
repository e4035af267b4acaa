"""Exception types shared across the package.

Every domain error raised by lexgap derives from LexgapError so callers
(CLI, HTTP service) can map the whole family to one failure mode.
"""

from __future__ import annotations


class LexgapError(Exception):
    """Base class for all domain errors."""


# ---------------------------------------------------------------- lexicon

class EmptyField(LexgapError):
    pass


class DuplicateEntry(LexgapError):
    pass


class ConflictingLexicalization(LexgapError):
    pass


class SameLanguage(LexgapError):
    pass


class UnknownEntry(LexgapError):
    pass


class UnknownConcept(LexgapError):
    pass


class InvalidCounts(LexgapError):
    pass


class UnknownLanguage(LexgapError):
    pass


class RelationCycle(LexgapError):
    """Adding this relation would make the hypernym graph cyclic."""


class BadDocument(LexgapError):
    """A lexicon document is structurally invalid."""


# -------------------------------------------------------------- ingestion

class BadHeader(LexgapError):
    pass


class MalformedRow(LexgapError):
    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(f"line {line}: {message}" if message else f"line {line}")


class DimensionMismatch(LexgapError):
    def __init__(self, line: int, expected: int, got: int):
        self.line = line
        super().__init__(f"line {line}: expected {expected} dims, got {got}")


class EmptyTable(LexgapError):
    pass


class ZeroNormVector(LexgapError):
    def __init__(self, line: int, token: str):
        self.line = line
        self.token = token
        super().__init__(f"line {line}: zero-norm vector for {token!r}")


class AllTokensUnknown(LexgapError):
    pass


class SourceUnavailable(LexgapError):
    """Transport failure talking to a gloss source; distinct from a miss."""


# -------------------------------------------------------------- agreement

class DuplicateResponse(LexgapError):
    pass


class NoPairableItems(LexgapError):
    pass


class AllMissing(LexgapError):
    pass


# --------------------------------------------------------------- workflow

class KOutOfRange(LexgapError):
    pass


class RunnerFailure(LexgapError):
    pass


class AllDontKnow(LexgapError):
    pass


class MissingDecision(LexgapError):
    def __init__(self, row: int, message: str = ""):
        self.row = row
        super().__init__(message or f"row {row} has no expert decision")


class BadAnswerSyntax(LexgapError):
    """A serialized answer or decision token cannot be parsed."""


# --------------------------------------------------------------- campaign

class EmptyDataset(LexgapError):
    pass


class BadGuidelines(LexgapError):
    pass


class BadConfig(LexgapError):
    pass


class ACQBankTooSmall(LexgapError):
    pass


class NotConsented(LexgapError):
    pass


class SessionDone(LexgapError):
    pass


class InvalidTransition(LexgapError):
    pass


class EmptyNewWord(LexgapError):
    pass


class ACQsUnanswered(LexgapError):
    pass


class NoSurvivingResponses(LexgapError):
    pass


class Direction1NotFinal(LexgapError):
    pass


class NotFinal(LexgapError):
    pass


class UnknownCampaign(LexgapError):
    pass


class IllegalLifecycle(LexgapError):
    pass


# ---------------------------------------------------------------- service

class CorruptLog(LexgapError):
    def __init__(self, sequence: int, message: str = ""):
        self.sequence = sequence
        super().__init__(message or f"corrupt event at sequence {sequence}")


class AuthFailure(LexgapError):
    pass


class AwaitingResponses(LexgapError):
    """A validation procedure needs a run that has not been collected yet."""

    def __init__(self, participants: tuple[str, ...]):
        self.participants = participants
        super().__init__(f"awaiting responses from {', '.join(participants)}")


# ------------------------------------------------------------------- llm

class BatchTooLarge(LexgapError):
    pass


class TransportError(LexgapError):
    pass


class ParseError(LexgapError):
    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(f"line {line}: {message}" if message else f"line {line}")


class UnmatchedAnnotation(LexgapError):
    pass
