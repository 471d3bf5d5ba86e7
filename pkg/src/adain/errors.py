"""Exception taxonomy shared across the package."""


class DimensionError(ValueError):
    """Tensor shapes violate an operation's contract."""


class ContractError(ValueError):
    """An operation was called outside its declared contract."""


class ConfigError(ValueError):
    """A configuration or control invariant is violated."""


class RegionOverlapError(ConfigError):
    """Binarized spatial-control masks overlap at feature resolution."""

    def __init__(self, count):
        self.count = count
        super().__init__(f"masks overlap at {count} feature positions after binarization")


class FormatError(ValueError):
    """A serialized artifact (weights bundle, descriptor) is malformed."""


class TrainingDiverged(RuntimeError):
    """Loss became NaN/Inf; carries the iteration and offending term."""

    def __init__(self, iteration, term):
        self.iteration = iteration
        self.term = term
        super().__init__(f"non-finite {term} loss at iteration {iteration}")
