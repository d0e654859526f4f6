class ConfigurationError(ValueError):
    """Invalid parameters or inconsistent scenario data."""


class FeasibilityError(ValueError):
    """A scheduling decision violates the muting/single-user linking constraint."""

    def __init__(self, bs: int, prb: int, msg: str | None = None):
        self.bs = bs
        self.prb = prb
        super().__init__(msg or f"linking constraint violated at BS {bs}, PRB {prb}")


class DecodeError(ValueError):
    """A lifted solution cannot be mapped back to a scheduling decision."""
