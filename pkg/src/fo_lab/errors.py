"""Exception hierarchy. The CLI maps each family to an exit code."""


class FoLabError(Exception):
    exit_code = 3


class DomainError(FoLabError, ValueError):
    """Input outside a declared space or parameter range."""

    exit_code = 1


class ConfigError(FoLabError):
    exit_code = 1


class RuntimeViolation(FoLabError):
    """A game rule was broken during a run."""

    exit_code = 2


class BudgetExceeded(RuntimeViolation):
    pass


class ForbiddenQuery(RuntimeViolation):
    """Decapsulation or decryption query on the challenge ciphertext."""


class OracleAccessError(RuntimeViolation):
    """The adversary asked for an oracle its game does not grant."""


class OracleViolation(RuntimeViolation):
    """An oracle was used more often than the game allows (e.g. a second FCO query)."""


class InvariantError(FoLabError):
    exit_code = 3
