"""Exception types shared across the package."""


class PassForestError(Exception):
    """Base class for every error raised by this package."""


class ParseError(PassForestError):
    """Malformed registry file line or field."""


class DuplicatePass(ParseError):
    """A pass name occurs more than once in a registry source."""


class UnknownPass(PassForestError):
    """A pass name is not present in the registry."""


class PipelineSyntaxError(PassForestError):
    """Bad tokens or unbalanced parentheses in a pipeline string."""


class TopLevelNotModule(PipelineSyntaxError):
    """A top-level pipeline element is not a module manager."""


class LevelMismatch(PassForestError):
    """A pass or manager is placed under an incompatible manager."""


class EmptyManager(PassForestError):
    """A manager with no children was parsed or constructed."""


class MalformedIR(PassForestError):
    """Textual IR with unbalanced function-body braces."""


class BackendUnavailable(PassForestError):
    """The evaluation backend cannot run (missing binary, missing file)."""


class InvalidPipeline(PassForestError):
    """A pipeline failed validation before evaluation.

    Carries the list of violations that caused the rejection.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations) or "invalid pipeline"
        super().__init__(summary)


class SchemaError(PassForestError):
    """A serialized graph or mock-program file violates its schema."""


class InvalidBaseline(PassForestError):
    """A baseline instruction count of zero cannot anchor a percentage."""


class ChromosomeLengthMismatch(PassForestError):
    """A partition chromosome does not match the decision-point count."""
