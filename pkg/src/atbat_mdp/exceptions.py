class AtBatError(Exception):
    """Base class for all errors raised by this package."""


class TerminalStateError(AtBatError, ValueError):
    pass


class NonStochasticModel(AtBatError, ValueError):
    pass


class NoActionableState(AtBatError, ValueError):
    pass


class EmptyTestData(AtBatError, ValueError):
    pass


class TooManyStates(AtBatError, ValueError):
    pass


class MalformedLine(AtBatError, ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class InconsistentAtBat(AtBatError, ValueError):
    def __init__(self, at_bat_id: str, reason: str):
        super().__init__(f"at-bat {at_bat_id}: {reason}")
        self.at_bat_id = at_bat_id
        self.reason = reason


class EmptyInput(AtBatError, ValueError):
    pass


class PoolError(AtBatError):
    """A general-pool solve failed; ``pool_index`` says which one."""

    def __init__(self, pool_index: int, cause: Exception):
        super().__init__(f"pool {pool_index}: {cause}")
        self.pool_index = pool_index
        self.cause = cause


class EmptyResults(AtBatError, ValueError):
    pass


class SingleClassData(AtBatError, ValueError):
    pass


class EmptyData(AtBatError, ValueError):
    pass


class ZeroPlateAppearances(AtBatError, ValueError):
    pass


class MissingTrajectory(AtBatError, ValueError):
    def __init__(self, seq: int):
        super().__init__(f"pitch {seq} has no trajectory")
        self.seq = seq


class InvalidSpec(AtBatError, ValueError):
    pass


class StageError(AtBatError):
    """Pipeline failure labelled with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
