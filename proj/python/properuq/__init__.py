"""Proper scores, uncertainty decompositions, kernel embeddings, and
calibration estimators.

The heavy lifting lives in the compiled extension ``_properuq``. Installed
wheels place it inside this package; the in-tree test layout puts it on
``sys.path`` next to the build outputs, so both locations are tried.
"""

try:  # installed wheel layout
    from . import _properuq as _impl
except ImportError:  # in-tree layout: extension sits on sys.path
    import _properuq as _impl

__all__ = sorted(name for name in dir(_impl) if not name.startswith("_"))
globals().update({name: getattr(_impl, name) for name in __all__})

__version__ = _impl.version()
