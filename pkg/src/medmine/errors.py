"""Exception and warning types.

Everything raised on bad *data* derives from :class:`MedMineError`; bad
*parameters* additionally derive from :class:`ParameterError` so the CLI can
map them to the usage exit code.
"""

from __future__ import annotations


class MedMineError(Exception):
    """Base class for all data errors raised by this package."""


class ParameterError(MedMineError, ValueError):
    """A caller passed an invalid argument (a usage error, not a data error)."""


class AnnotationError(MedMineError):
    """An annotation failed to parse or validate.

    ``line`` and ``doc_id`` are filled in by the parsers so that every failure
    can be located in the input file.
    """

    def __init__(self, message: str, *, line: int | None = None, doc_id: str | None = None):
        self.message = message
        self.line = line
        self.doc_id = doc_id
        super().__init__(str(self))

    def located(self, *, line: int | None = None, doc_id: str | None = None) -> "AnnotationError":
        if line is not None and self.line is None:
            self.line = line
        if doc_id is not None and self.doc_id is None:
            self.doc_id = doc_id
        self.args = (str(self),)
        return self

    def __str__(self) -> str:
        where = []
        if self.doc_id is not None:
            where.append(f"doc {self.doc_id}")
        if self.line is not None:
            where.append(f"line {self.line}")
        prefix = f"{', '.join(where)}: " if where else ""
        return f"{prefix}{self.message}"


class OffsetOutOfBounds(AnnotationError):
    pass


class FragmentOverlap(AnnotationError):
    pass


class SurfaceMismatch(AnnotationError):
    pass


class MalformedLine(AnnotationError):
    pass


class MissingDocHeader(AnnotationError):
    pass


class DuplicateSpanId(AnnotationError):
    pass


class EmptyCorpus(MedMineError):
    pass


class LabelAbsent(MedMineError):
    pass


class DocMismatch(MedMineError):
    pass


class BadChunkParams(ParameterError):
    pass


class BadSplitSpec(ParameterError):
    pass


class EmptyReport(MedMineError):
    pass


class AllLabelsExcluded(MedMineError):
    pass


class LengthMismatch(MedMineError):
    pass


class MissingDevReport(MedMineError):
    pass


class MissingLabel(MedMineError):
    pass


class TemplateMissingLabel(MedMineError):
    pass


class MedMineWarning(UserWarning):
    pass


class UnknownLabelWarning(MedMineWarning):
    pass


class SurfaceMismatchWarning(MedMineWarning):
    pass


class OverlapResolvedWarning(MedMineWarning):
    pass
