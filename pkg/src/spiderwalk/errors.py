class InvariantViolation(RuntimeError):
    """A simulated object broke a construction invariant."""

    def __init__(self, message: str, trial: int | None = None):
        self.trial = trial
        if trial is not None:
            message = f"trial {trial}: {message}"
        super().__init__(message)


class SeriesCapError(InvariantViolation):
    pass


class SnapGuardError(InvariantViolation):
    pass
