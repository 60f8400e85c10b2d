"""Exception hierarchy shared by all stainbench modules."""


class StainBenchError(Exception):
    """Base class for every error raised by this package."""


class DataError(StainBenchError, ValueError):
    """Invalid or inconsistent input data (bad shapes, missing files, leaks)."""


class StainEstimationError(StainBenchError):
    """Per-image stain estimation could not produce a usable stain matrix."""


class InsufficientTissue(StainEstimationError):
    """Too few pixels above the optical density threshold."""

    def __init__(self, n_pixels, required):
        self.n_pixels = n_pixels
        self.required = required
        super().__init__(
            f"only {n_pixels} tissue pixels above threshold, need {required}"
        )


class DegenerateStainPlane(StainEstimationError):
    """The optical densities span fewer than two independent directions."""


class NoUsableTiles(StainBenchError):
    """Corpus fitting skipped every tile."""

    def __init__(self, reasons):
        self.reasons = list(reasons)
        summary = "; ".join(f"{k}: {v}" for k, v in self.reasons[:10])
        super().__init__(f"no usable tiles in corpus ({len(self.reasons)} skipped) {summary}")


class NumericalError(StainBenchError, ArithmeticError):
    """A numerical routine failed (non-finite values, asymmetric input...)."""
