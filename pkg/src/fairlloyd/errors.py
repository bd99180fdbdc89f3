class FairLloydError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgumentError(FairLloydError, ValueError):
    pass


class UnsupportedModeError(FairLloydError, ValueError):
    pass


class DegenerateClusterError(FairLloydError, ValueError):
    """No present group of a cluster carries positive weight."""

    def __init__(self, clusters):
        self.clusters = tuple(int(i) for i in clusters)
        super().__init__(
            f"clusters {list(self.clusters)} have zero total weight "
            "sum_j gamma_j * frac[i, j]; their center is undetermined")


class InvalidCertificateError(FairLloydError, ValueError):
    """Centers are not stationary on Z_S, so min_j f_j would not be a sound bound."""


class IngestError(FairLloydError, ValueError):
    pass


class EncodingError(FairLloydError, ValueError):
    pass
