"""Process-wide knobs: the dense-matrix size cap."""

import os

DEFAULT_DENSE_CAP = 4096
_override = None


def dense_cap():
    """Largest n_x^d for which dense matrices may be assembled.

    Precedence: :func:`set_dense_cap`, then ``DRIFTDIFF_DENSE_CAP``, then 4096.
    """
    if _override is not None:
        return _override
    env = os.environ.get("DRIFTDIFF_DENSE_CAP")
    if env:
        return int(env)
    return DEFAULT_DENSE_CAP


def set_dense_cap(value):
    global _override
    _override = None if value is None else int(value)


class DenseCapExceeded(ValueError):
    """Raised when a dense assembly would exceed the configured cap."""


def check_dense(size):
    cap = dense_cap()
    if size > cap:
        raise DenseCapExceeded(f"dense cap exceeded: {size} > {cap}")
