"""Python bindings for the operational-loss engine."""

try:
    from ._oprisk import *  # noqa: F401,F403
    from ._oprisk import __doc__  # noqa: F401
except ImportError:  # pragma: no cover - build-tree layout
    from _oprisk import *  # noqa: F401,F403
    from _oprisk import __doc__  # noqa: F401
