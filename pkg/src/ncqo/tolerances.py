"""Default numerical tolerances, overridable through ``NCQO_TOL``.

``NCQO_TOL`` holds comma separated ``name=value`` pairs, for example
``NCQO_TOL="quad=1e-12,rk4=1e-9"``.  Unknown names raise ``ParseError``.
"""
import os
from functools import lru_cache

from .errors import ParseError

DEFAULTS = {
    # relative change allowed when a quadrature order is doubled
    "quad": 1e-10,
    # max change between successive RK4 step halvings
    "rk4": 1e-8,
    # relative residual of EP family constraint relations
    "constraint": 1e-10,
    # bisection width for physical window endpoints
    "window": 1e-9,
    # Newton step tolerance in the modified-NC inversion
    "newton": 1e-13,
    # relative d-residual accepted by invert_nc_modified
    "d_residual": 1e-6,
    # absolute slack before a negative radicand is a domain error
    "radicand": 1e-12,
}


@lru_cache(maxsize=8)
def _parse_cached(text):
    return tuple(sorted(parse_overrides(text).items()))


def parse_overrides(text):
    out = {}
    if not text or not text.strip():
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ParseError(f"NCQO_TOL entry {item!r} is not name=value", key="NCQO_TOL")
        name, value = (s.strip() for s in item.split("=", 1))
        if name not in DEFAULTS:
            raise ParseError(f"NCQO_TOL: unknown tolerance {name!r}", key=f"NCQO_TOL.{name}")
        try:
            v = float(value)
        except ValueError:
            raise ParseError(f"NCQO_TOL: {name} must be a number, got {value!r}",
                             key=f"NCQO_TOL.{name}") from None
        if not v > 0:
            raise ParseError(f"NCQO_TOL: {name} must be positive", key=f"NCQO_TOL.{name}")
        out[name] = v
    return out


def get(name):
    """Current value of tolerance ``name`` (env override wins)."""
    overrides = dict(_parse_cached(os.environ.get("NCQO_TOL", "")))
    return overrides.get(name, DEFAULTS[name])
