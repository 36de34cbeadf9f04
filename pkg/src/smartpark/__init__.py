"""smartpark: a permissioned, replicated, hash-chained parking ledger with a
presence-detection simulator, billing engine, and authenticated REST gateway."""

__version__ = "0.1.0"
