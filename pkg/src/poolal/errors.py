"""Exception hierarchy shared by all modules."""


class PoolALError(Exception):
    """Base class for every error raised by this package."""


class DatasetError(PoolALError, ValueError):
    pass


class KernelError(PoolALError, ValueError):
    pass


class DegenerateKernelError(PoolALError, ArithmeticError):
    """Cholesky factorization failed even after jitter was added."""


class SnapshotError(PoolALError, ValueError):
    pass


class SelectionError(PoolALError, ValueError):
    pass


class MetricError(PoolALError, ValueError):
    pass


class HistoryError(PoolALError, ValueError):
    pass


class OracleError(PoolALError, RuntimeError):
    pass


class ExperimentError(PoolALError, ValueError):
    pass
