"""Graph-RL traffic stack: simulator, encoder, Q-networks, and trainers."""

try:
    from ._grltraffic import *  # noqa: F401,F403  (installed wheel layout)
except ImportError:  # pragma: no cover - build-tree layout used by ctest
    from _grltraffic import *  # noqa: F401,F403
