"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses without a lookup table.
"""


class PipelineError(Exception):
    exit_code = 1


class ConfigError(PipelineError, ValueError):
    exit_code = 2


class DataError(PipelineError, ValueError):
    exit_code = 3


class RemoteError(PipelineError):
    exit_code = 4


class EvaluationError(PipelineError, ValueError):
    exit_code = 5


# corpus


class MalformedRow(DataError):
    def __init__(self, line: int, reason: str, source: str = "<input>"):
        self.line = line
        self.source = source
        super().__init__(f"{source}:{line}: {reason}")


class UnknownSpeaker(DataError):
    def __init__(self, line: int, speaker: str, source: str = "<input>"):
        self.line = line
        self.speaker = speaker
        super().__init__(f"{source}:{line}: unknown speaker {speaker!r}")


class EmptyTranscript(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class ScoreOutOfRange(DataError):
    def __init__(self, score, context: str = ""):
        self.score = score
        msg = f"PHQ-8 score {score!r} outside [0, 24]"
        super().__init__(f"{context}: {msg}" if context else msg)


class DuplicateSession(DataError):
    pass


# prompts / sampling


class EmptyTranscriptText(DataError):
    pass


class EmptySourceItem(DataError):
    pass


class MissingDistribution(ConfigError):
    pass


# remote


class TransportError(RemoteError):
    pass


class ProtocolError(RemoteError):
    pass


class AuthError(RemoteError):
    pass


class RequestTimeout(RemoteError, TimeoutError):
    pass


# generation


class ParseError(DataError):
    pass


class MissingKey(ParseError):
    pass


class GenerationFailed(RemoteError):
    def __init__(self, item: str, cause: str, raw_output: str | None = None):
        self.item = item
        self.cause = cause
        self.raw_output = raw_output
        super().__init__(f"generation of {item} failed: {cause}")


class PipelineAborted(RemoteError):
    pass


# embeddings / evaluation


class EmptyText(DataError):
    pass


class DimensionMismatch(EvaluationError):
    pass


class LengthMismatch(EvaluationError):
    pass


class EmptyInput(EvaluationError):
    pass


class EmptySet(EvaluationError):
    pass


class SingularSystem(EvaluationError):
    pass


class DegenerateData(EvaluationError):
    pass
