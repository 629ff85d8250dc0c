"""Exception hierarchy shared by all reqsel modules."""


class ReqselError(Exception):
    """Base class for every error raised by this package."""


class InputFormatError(ReqselError):
    """Malformed input data: CSV/JSON schema violations, ragged rows,
    non-binary cells, unparseable numbers. Messages carry the offending
    line/column where available."""


class ValidationError(ReqselError):
    """A documented precondition or domain invariant was violated."""


class DegenerateMarginalError(ValidationError):
    """A requirement is wanted by every user or by none, so its latent
    Gaussian threshold is infinite and the row cannot be fitted."""


class InfeasibleCovarianceError(ValidationError):
    """A target joint probability falls outside the Frechet bounds, so no
    latent correlation can reproduce it."""
