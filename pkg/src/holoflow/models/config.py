"""Build models from plain dictionaries (the ``model:`` block of a scenario file)."""
import numpy as np

from ..errors import ConfigError
from .grid import TWO_PI, conformal_t2, flat_torus, warped_t3
from .lie import berger_sphere
from .symmetric import SymmetricGeometry

KINDS = ("flat-torus", "round-sphere", "product", "berger-sphere", "warped-T3", "conformal-T2")


def trig_series(spec):
    """Callable ``x -> const + sum a cos(k x) + sum b sin(k x)`` from a dictionary.

    ``{"const": 1.0, "cos": [[1, 0.3]], "sin": [[2, 0.1]]}``; a bare number is a constant.
    """
    if spec is None:
        return None
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        c = float(spec)
        return lambda x: np.full_like(x, c)
    if not isinstance(spec, dict):
        raise ConfigError(f"expected a number or a trig-series mapping, got {spec!r}")
    unknown = set(spec) - {"const", "cos", "sin"}
    if unknown:
        raise ConfigError(f"unknown trig-series keys {sorted(unknown)}")
    const = float(spec.get("const", 0.0))
    cos = [(float(k), float(a)) for k, a in spec.get("cos", [])]
    sin = [(float(k), float(a)) for k, a in spec.get("sin", [])]

    def fn(x):
        out = np.full_like(x, const, dtype=float)
        for k, a in cos:
            out = out + a * np.cos(k * x)
        for k, a in sin:
            out = out + a * np.sin(k * x)
        return out

    return fn


def trig_series_2d(terms):
    """``(x, y) -> sum a cos(kx x + ky y) + b sin(kx x + ky y)`` from ``[[kx, ky, a, b], ...]``."""
    if terms is None:
        return None
    parsed = []
    for t in terms:
        if len(t) != 4:
            raise ConfigError("2d series terms are [kx, ky, a_cos, b_sin]")
        parsed.append(tuple(float(v) for v in t))

    def fn(X, Y):
        out = np.zeros_like(X, dtype=float)
        for kx, ky, a, b in parsed:
            ph = kx * X + ky * Y
            out = out + a * np.cos(ph) + b * np.sin(ph)
        return out

    return fn


def _factor(f):
    if not isinstance(f, (list, tuple)) or not f:
        raise ConfigError(f"bad product factor {f!r}")
    if f[0] == "sphere":
        if len(f) != 3:
            raise ConfigError("sphere factors are [sphere, dim, radius]")
        return ("sphere", int(f[1]), float(f[2]))
    if f[0] == "flat":
        return ("flat", int(f[1]))
    raise ConfigError(f"unknown factor kind {f[0]!r}")


def build_model(spec, resolution=None):
    """Geometry from a ``model:`` mapping; ``resolution`` overrides the grid size."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("model needs a 'kind'")
    kind = spec["kind"]
    res = resolution if resolution is not None else spec.get("resolution")
    length = float(spec.get("length", TWO_PI))
    if kind == "flat-torus":
        return flat_torus(int(spec.get("n", 3)), res or 8, length)
    if kind == "round-sphere":
        return SymmetricGeometry([("sphere", int(spec.get("n", 3)), float(spec.get("radius", 1.0)))])
    if kind == "product":
        return SymmetricGeometry([_factor(f) for f in spec.get("factors", [])])
    if kind == "berger-sphere":
        return berger_sphere(float(spec.get("a", 1.0)), float(spec.get("b", 1.0)), float(spec.get("c", 1.0)))
    if kind == "warped-T3":
        return warped_t3(trig_series(spec.get("f")), trig_series(spec.get("h")), res or 32, length)
    if kind == "conformal-T2":
        return conformal_t2(trig_series_2d(spec.get("u")), res or 32, length)
    raise ConfigError(f"unknown model kind {kind!r}; choose from {KINDS}")
