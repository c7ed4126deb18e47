"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value violates a model invariant.

    The message starts with the field path of the offending entry,
    e.g. ``transition.feint.row[1]: row sums to 0.9, expected 1``.
    """


class CapacityError(RuntimeError):
    """A consolidated enumeration would exceed the configured cap.

    Raised by the full-table evaluations; the reduced (aggregated)
    evaluations avoid the blow-up and remain available.
    """


class ModelError(ValueError):
    """The requested computation is incompatible with the model.

    Typical cause: asking for a reduced (aggregated) evaluation while the
    inter-arrival distribution depends on the category label or the attack
    type, which the reduction requires to be constant.
    """


class ConvergenceError(RuntimeError):
    """Value iteration hit the iteration cap before reaching the threshold."""
