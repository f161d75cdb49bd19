"""Generalized Newton methods for tilt-stable minimizers of nonsmooth problems."""

from tiltnewton._core import *  # noqa: F401,F403
from tiltnewton._core import __doc__ as _core_doc

__doc__ = _core_doc
