"""Exception types shared across the pipeline."""


class ShoptalkError(Exception):
    """Base class for all pipeline errors."""


class MalformedRecordError(ShoptalkError):
    """A line in an input file could not be parsed (strict mode only)."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"malformed record at line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateIdError(ShoptalkError):
    """Two catalog records share a product id.  Always fatal."""

    def __init__(self, product_id: str, line_no: int):
        super().__init__(f"duplicate product id {product_id!r} at line {line_no}")
        self.product_id = product_id
        self.line_no = line_no


class InvalidLexiconError(ShoptalkError):
    """A lexicon violates its bounds (weights, multipliers, casing)."""


class DanglingSpanError(ShoptalkError):
    """An opinion span references a review or sentence that does not exist."""

    def __init__(self, review_id: str, detail: str = ""):
        msg = f"span references unknown sentence in review {review_id!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.review_id = review_id


class NoEligibleProductError(ShoptalkError):
    """No catalog product has enough indexed opinions to seed a dialog."""


class PhrasebankError(ShoptalkError):
    """The phrasebank is missing a section or contains a bad template."""


class UnboundSlotError(ShoptalkError):
    """Realization was attempted on a pair with unfilled slots."""


class InvalidStateError(ShoptalkError):
    """A dialog state violates its invariants; indicates a caller bug."""


class GenerationExhaustedError(ShoptalkError):
    """All retries were consumed without satisfying a conversation template."""

    def __init__(self, template_id: int, attempts: int):
        super().__init__(
            f"template {template_id} exhausted after {attempts} attempts"
        )
        self.template_id = template_id
        self.attempts = attempts


class SchemaViolationError(ShoptalkError):
    """A dataset line does not conform to the conversation schema."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"schema violation at line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason
