"""Exact and soft matrix forms of binary decision trees."""

from ._core import *  # noqa: F401,F403
from ._core import InputError, InvariantError  # noqa: F401

__version__ = "0.1.0"
