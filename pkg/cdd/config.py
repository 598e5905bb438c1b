"""Environment configuration and defaults for cdd."""

import os
from typing import Optional

from .exceptions import InvalidArgumentError

VERSION = "0.1.0"

THREADS_ENV = "CDD_THREADS"
BRUTE_LIMIT_ENV = "CDD_BRUTE_LIMIT"

DEFAULT_BRUTE_LIMIT = 2**22

# Distillation
DEFAULT_ALPHA = 1.0
DEFAULT_D_MAX = 0.01
DEFAULT_STEP = 2e-4
DEFAULT_DELTA = 1e-4
DEFAULT_DECAY_RATE = 300.0

# Training and evaluation
DEFAULT_TAU = 0.01
DEFAULT_LR = 0.01
DEFAULT_JITTER_SIGMA = 0.05
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _read_int(name: str) -> Optional[int]:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"{name} must be an integer, got '{raw}'")
    if value < 0:
        raise InvalidArgumentError(f"{name} must be >= 0, got {value}")
    return value


def get_thread_count() -> int:
    """Get the cap on internal parallelism.

    Returns:
        Number of worker threads from the CDD_THREADS environment variable;
        ``1`` when it is ``0`` (sequential) and ``-1`` (all cores) when unset.
    """
    value = _read_int(THREADS_ENV)
    if value is None:
        return -1
    return max(value, 1)


def get_brute_limit() -> int:
    """Get the largest |source|*|target| product searched by brute force.

    Returns:
        Value of CDD_BRUTE_LIMIT, or the default of 2**22.
    """
    value = _read_int(BRUTE_LIMIT_ENV)
    return DEFAULT_BRUTE_LIMIT if value is None else value


def pool_size() -> int:
    """Number of threads for pools built on top of :func:`get_thread_count`."""
    threads = get_thread_count()
    if threads == -1:
        return os.cpu_count() or 1
    return threads
