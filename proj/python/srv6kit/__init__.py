"""Python bindings for the srv6kit agent, transports, controller and emulator."""

import os as _os

_here = _os.path.dirname(__file__)
_fibctl = _os.path.join(_here, "srv6kit-fibctl")
if "SRV6_KIT_FIBCTL" not in _os.environ and _os.path.exists(_fibctl):
    _os.environ["SRV6_KIT_FIBCTL"] = _fibctl

from ._core import *  # noqa: E402,F401,F403
from ._core import Srv6KitError  # noqa: E402,F401
