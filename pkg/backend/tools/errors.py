"""
Exception hierarchy shared by the pipeline, the CLI and the HTTP app.
Surfaces map these onto exit codes / HTTP statuses.
"""

from typing import Iterable, Optional


class PipelineError(Exception):
    exit_code = 2


class UsageError(PipelineError):
    exit_code = 1


class DataError(PipelineError):
    exit_code = 2


class EdgeListParseError(DataError):
    def __init__(self, line_no: int, line: str, source: str = "<pairs>"):
        self.line_no = line_no
        self.line = line
        self.source = source
        super().__init__(f"{source}:{line_no}: malformed edge record {line!r}")


class FixtureError(DataError):
    pass


class SamplingError(DataError):
    pass


class IntegrityError(DataError):
    pass


class MissingArtifactError(DataError):
    def __init__(self, artifact: str, stage: str):
        self.artifact = artifact
        self.stage = stage
        super().__init__(f"missing artifact '{artifact}'; run the '{stage}' stage first")


class CoverageError(DataError):
    def __init__(self, message: str, missing: Iterable = ()):
        self.missing = sorted(missing)
        detail = f": {', '.join(str(m) for m in self.missing)}" if self.missing else ""
        super().__init__(f"{message}{detail}")


class EmptyVocabularyError(DataError):
    pass


class ClusteringError(DataError):
    pass


class TransientProviderError(PipelineError):
    exit_code = 3

    def __init__(self, message: str, frontier_path: Optional[str] = None):
        self.frontier_path = frontier_path
        super().__init__(message)
