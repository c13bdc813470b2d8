"""Deep clustering over precomputed embeddings: SDCN/EDESC-style trainers,
K-means and Birch baselines, ARI/ACC metrics, and the experiment harness."""

try:
    from ._core import *  # noqa: F401,F403
    from . import _core as _core  # noqa: F401
except ImportError:  # running against a plain cmake build tree
    from _core import *  # noqa: F401,F403
    import _core as _core  # noqa: F401

__all__ = [name for name in dir(_core) if not name.startswith("_")]
