"""Exception hierarchy shared by every layer of the package."""


class NacError(Exception):
    """Base class for all package errors."""


# wire
class MalformedPacket(NacError):
    pass


# naming
class NotAConventionName(NacError):
    pass


class NameConventionViolation(NacError):
    pass


# net_sim
class InvalidTopology(NacError):
    pass


# crypto
class DecryptFailed(NacError):
    """Wrong key, bad padding or corrupted ciphertext; deliberately indistinguishable."""


class PayloadTooLarge(NacError):
    pass


class PolicySyntaxError(NacError):
    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class PolicyNotSatisfied(NacError):
    pass


class ProviderError(NacError):
    pass


# entities
class FetchTimeout(NacError):
    pass


class NotAuthorized(NacError):
    pass


class SignatureInvalid(NacError):
    pass


class KekUnavailable(NacError):
    pass


class DuplicateGranularity(NacError):
    pass


class UnknownGranularity(NacError):
    pass


class InvalidState(NacError):
    pass


class AttributeNotGranted(NacError):
    pass


class WindowExpired(NacError):
    pass


# harness
class ConfigError(NacError):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
