"""Shared exception types; the CLI maps these onto exit codes."""


class ConfigError(Exception):
    """Invalid configuration file or option combination (exit code 2)."""


class DataError(Exception):
    """Missing or malformed input data (exit code 3)."""


class GraphError(Exception):
    """Structurally invalid network graph (e.g. unreachable required output)."""


class InfeasibleSearchError(Exception):
    """No architecture satisfies the parameter constraints (exit code 4)."""

    def __init__(self, message, best_infeasible=None):
        super().__init__(message)
        self.best_infeasible = best_infeasible
