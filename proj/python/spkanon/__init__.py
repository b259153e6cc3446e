"""Speaker anonymization toolkit: python surface over the C++ core."""

from spkanon._core import *  # noqa: F401,F403
from spkanon._core import __version__  # noqa: F401
