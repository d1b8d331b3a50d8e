"""Error taxonomy shared by all modules."""


class WorkbenchError(Exception):
    """Base class for everything raised on purpose."""


class StructuralError(WorkbenchError):
    """Dimension mismatches, bad register arithmetic, out-of-range targets."""


class ValidationError(WorkbenchError):
    """Inputs that violate a documented precondition."""


class ContractError(WorkbenchError):
    """Caller broke an inter-module contract (e.g. mismatched state preparer)."""
