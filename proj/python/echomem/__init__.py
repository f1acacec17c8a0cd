"""Photon-echo quantum memory simulator (Python bindings)."""

from ._echomem import *  # noqa: F401,F403
from ._echomem import __version__  # noqa: F401
