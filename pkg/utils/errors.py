class RoboTraceError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class TraceFormatError(RoboTraceError):
    pass


class PcapFormatError(RoboTraceError):
    pass


class DomainError(RoboTraceError, ValueError):
    pass


class DatasetError(RoboTraceError):
    pass


class ModelError(RoboTraceError):
    pass


class ReportError(RoboTraceError):
    pass


class ConfigError(RoboTraceError):
    pass


class StageError(RoboTraceError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
