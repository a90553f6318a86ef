"""Exception types raised by the solver."""


class OffshellError(Exception):
    """Base class for all numerical failures."""


class RangeExceeded(OffshellError):
    def __init__(self, value: float, threshold: float):
        self.value = value
        self.threshold = threshold
        super().__init__(f"|parameter| = {abs(value):g} exceeds representable range {threshold:g}")


class PoleAt(OffshellError):
    def __init__(self, alpha: float, which: str = ""):
        self.alpha = alpha
        super().__init__(f"Gamma pole at alpha={alpha!r} {which}".strip())


class ZeroPrefactor(OffshellError):
    def __init__(self, p: int):
        self.p = p
        super().__init__(f"sin(pi p / 2) vanishes for even p={p}")


class ScanInconclusive(OffshellError):
    """The root scan could not certify the sign of R on a tail."""


class NotConverged(OffshellError):
    def __init__(self, estimate: float, msg: str = ""):
        self.estimate = estimate
        super().__init__(msg or f"quadrature did not converge (error estimate {estimate:g})")


class ShockTooClose(OffshellError):
    """dR/dtau' is too small on the regularization offset interval."""


class SegmentTooShort(OffshellError):
    pass


class ExtrapolationUnstable(OffshellError):
    pass


class SingularField(OffshellError):
    """The observation point sits on a common root R = dR/dtau' = 0."""


class NoRetardedRoot(OffshellError):
    pass


class ShockSingular(OffshellError):
    pass
