"""Exception hierarchy shared by the library and the CLI.

Every error carries an ``exit_code`` so the command-line front end can map
failures to stable process exit statuses without a lookup table of its own.
"""


class QcfrError(Exception):
    exit_code = 1


# field / linear algebra
class UnsupportedOrder(QcfrError, ValueError):
    exit_code = 2


class NonSquare(QcfrError, ValueError):
    exit_code = 2


class Singular(QcfrError, ArithmeticError):
    exit_code = 4


# codes
class InvalidParams(QcfrError, ValueError):
    exit_code = 2


class LengthMismatch(QcfrError, ValueError):
    exit_code = 2


class HelperUnavailable(QcfrError):
    exit_code = 5

    def __init__(self, node, needed=()):
        self.node = node
        self.needed = tuple(needed)
        msg = f"helper node {node} is unavailable"
        if self.needed:
            msg += f" (fixed helper set: {', '.join(map(str, self.needed))})"
        super().__init__(msg)


class SingularSubset(QcfrError, ArithmeticError):
    exit_code = 4

    def __init__(self, subset):
        self.subset = tuple(subset)
        super().__init__(f"node subset {self.subset} does not determine the file")


# analysis
class TooLarge(QcfrError):
    exit_code = 8


class NotFound(QcfrError):
    exit_code = 3

    def __init__(self, msg, conclusive=True):
        self.conclusive = conclusive
        super().__init__(msg)


# mbr
class Infeasible(QcfrError, ValueError):
    exit_code = 7


class EdgeCountMismatch(QcfrError, ValueError):
    exit_code = 7


class InsufficientCoverage(QcfrError):
    exit_code = 4


# simulator
class RepairImpossible(QcfrError):
    exit_code = 5


class SchemeViolation(QcfrError):
    exit_code = 6


# cli / shard I/O
class SearchFailed(QcfrError):
    exit_code = 3


class MissingHelpers(QcfrError):
    exit_code = 5

    def __init__(self, node, needed, missing):
        self.node = node
        self.needed = tuple(needed)
        self.missing = tuple(missing)
        super().__init__(
            f"cannot repair node {node}: needs shards {list(self.needed)}, "
            f"missing {list(self.missing)}"
        )


class InsufficientShards(QcfrError):
    exit_code = 4


class HeaderMismatch(QcfrError):
    exit_code = 6
