"""Python bindings for the blackbandit core library."""

from ._core import *  # noqa: F401,F403
from ._core import Error, Norm, Method

__all__ = [name for name in dir() if not name.startswith("_")]
