"""Mean-field ODEs for the densities of hosts carrying each consumer type.

State is ``(v11, v22, v13, v23)``: ``vij`` is the density of type-i hosts
associated with a consumer of type j.  Each host type covers half of space,
so ``u1 = 1/2 - v11 - v13`` and ``u2 = 1/2 - v22 - v23`` are the free hosts.
Parameters ``a, b`` are the birth rates scaled by the neighbourhood size.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ValidationError

REGION_TOL = 1e-9
EQ_TOL = 1e-12

EXTINCTION = "extinction"
SPECIALISTS_WIN = "specialists_win"
GENERALISTS_WIN = "generalists_win"
NEUTRAL_LINE = "neutral_line"
BOUNDARY = "subcritical_boundary"


@dataclass(frozen=True)
class MeanFieldParams:
    a: float
    b: float

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if not np.isfinite(float(v)) or v < 0:
                raise ValidationError(f"{name} must be finite and >= 0, got {v!r}")


def free_hosts(state):
    v11, v22, v13, v23 = state
    return 0.5 - v11 - v13, 0.5 - v22 - v23


def rhs(state, p: MeanFieldParams):
    """Time derivative of ``state``; works on floats or numpy arrays alike."""
    v11, v22, v13, v23 = state
    a, b = float(p.a), float(p.b)
    u1 = 0.5 - v11 - v13
    u2 = 0.5 - v22 - v23
    g = v13 + v23
    return (-v11 + a * u1 * v11,
            -v22 + a * u2 * v22,
            -v13 + b * u1 * g,
            -v23 + b * u2 * g)


def _region_violation(state) -> float:
    v11, v22, v13, v23 = state
    u1 = 0.5 - v11 - v13
    u2 = 0.5 - v22 - v23
    vals = (v11, v22, v13, v23, u1, u2)
    if isinstance(v11, float):
        return -min(vals)
    return -float(min(np.min(v) for v in vals))


def in_region(state, tol: float = REGION_TOL) -> bool:
    return _region_violation(state) <= tol


def _rk4_step(y, p, h):
    k1 = rhs(y, p)
    k2 = rhs(tuple(yi + 0.5 * h * ki for yi, ki in zip(y, k1)), p)
    k3 = rhs(tuple(yi + 0.5 * h * ki for yi, ki in zip(y, k2)), p)
    k4 = rhs(tuple(yi + h * ki for yi, ki in zip(y, k3)), p)
    return tuple(yi + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
                 for yi, a, b, c, d in zip(y, k1, k2, k3, k4))


def integrate(s0, p: MeanFieldParams, t_end: float, h: float = 0.01,
              every: int = 1, stop=None):
    """Classical fixed-step RK4 from ``s0`` to ``t_end``.

    ``s0`` may hold scalars or equally shaped arrays (a batch of starts).
    Returns ``(times, states)`` with ``states`` of shape ``(n, 4, ...)``,
    keeping every ``every``-th step plus the last.  ``stop(t, y)`` ends the
    run early when it returns true.  Raises :class:`ValidationError` when a
    step leaves the invariant region by more than 1e-9.
    """
    if h <= 0:
        raise ValidationError(f"step must be positive, got {h}")
    if t_end < 0:
        raise ValidationError(f"t_end must be >= 0, got {t_end}")
    y = tuple(np.asarray(v, dtype=float) if np.ndim(v) else float(v) for v in s0)
    if not in_region(y):
        raise ValidationError("initial state lies outside the invariant region")
    n = int(round(t_end / h))
    if abs(n * h - t_end) > 1e-9 * max(1.0, t_end):
        raise ValidationError(f"t_end={t_end} is not a multiple of h={h}")
    times, out = [0.0], [y]
    for k in range(1, n + 1):
        y = _rk4_step(y, p, h)
        if not in_region(y):
            raise ValidationError(
                f"step h={h} left the invariant region at t={k * h:.6g}; use a smaller step")
        if k % every == 0 or k == n:
            times.append(k * h)
            out.append(y)
        if stop is not None and stop(k * h, y):
            if times[-1] != k * h:
                times.append(k * h)
                out.append(y)
            break
    return np.array(times), np.array(out)


def specialist_equilibrium(a) -> tuple | None:
    if a <= 2:
        return None
    v = Fraction(1, 2) - 1 / _exact(a) if isinstance(a, (int, Fraction)) else 0.5 - 1.0 / a
    return (v, v, 0 * v, 0 * v)


def generalist_equilibrium(b) -> tuple | None:
    if b <= 1:
        return None
    v = Fraction(1, 2) - 1 / (2 * _exact(b)) if isinstance(b, (int, Fraction)) else 0.5 - 0.5 / b
    return (0 * v, 0 * v, v, v)


def invasion_equilibrium(a, b) -> tuple | None:
    """Interior equilibrium with specialist 2 absent, when a > 2 and 2a/(a+2) < b < a/2."""
    if not (a > 2 and 2 * a / (a + 2) < b < a / 2):
        return None
    exact = isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction))
    a_, b_ = (_exact(a), _exact(b)) if exact else (float(a), float(b))
    half = Fraction(1, 2) if exact else 0.5
    u1 = 1 / a_
    v23 = half - 1 / b_ + 1 / a_
    g = v23 / (1 - b_ / a_)
    v13 = g - v23
    v11 = half - u1 - v13
    return (v11, 0 * v11, v13, v23)


def _exact(v):
    return Fraction(v)


def _mirror(state):
    v11, v22, v13, v23 = state
    return (v22, v11, v23, v13)


def jacobian(state, p: MeanFieldParams, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of :func:`rhs`."""
    y = np.array([float(v) for v in state])
    J = np.empty((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = step
        J[:, j] = (np.array(rhs(y + e, p)) - np.array(rhs(y - e, p))) / (2 * step)
    return J


def stability(state, p: MeanFieldParams, tol: float = 1e-6) -> str:
    """'stable', 'unstable' or 'marginal' from the largest eigenvalue real part."""
    lead = np.linalg.eigvals(jacobian(state, p)).real.max()
    if lead < -tol:
        return "stable"
    if lead > tol:
        return "unstable"
    return "marginal"


def equilibria(p: MeanFieldParams) -> list[tuple[str, tuple, str]]:
    """Existing equilibria as ``(name, state, stability)``.

    Names: trivial, specialists, generalists, invasion, invasion_mirror.
    Exact rationals are kept when ``a`` and ``b`` are ints or Fractions.
    """
    found = [("trivial", (0.0, 0.0, 0.0, 0.0))]
    spec_eq = specialist_equilibrium(p.a)
    if spec_eq is not None:
        found.append(("specialists", spec_eq))
    gen_eq = generalist_equilibrium(p.b)
    if gen_eq is not None:
        found.append(("generalists", gen_eq))
    inv = invasion_equilibrium(p.a, p.b)
    if inv is not None:
        found.append(("invasion", inv))
        found.append(("invasion_mirror", _mirror(inv)))
    out = []
    for name, st in found:
        residual = max(abs(r) for r in rhs(tuple(float(v) for v in st), p))
        if residual > EQ_TOL:
            raise RuntimeError(f"{name} equilibrium has residual {residual:.3g}")
        out.append((name, st, stability(st, p)))
    return out


def _cmp(x, y) -> int:
    """Sign of x - y, exact for rationals and within 1e-12 for floats."""
    if isinstance(x, (int, Fraction)) and isinstance(y, (int, Fraction)):
        d = Fraction(x) - Fraction(y)
        return (d > 0) - (d < 0)
    d = float(x) - float(y)
    if abs(d) <= EQ_TOL:
        return 0
    return 1 if d > 0 else -1


def classify_regime(p: MeanFieldParams) -> str:
    a, b = p.a, p.b
    a2, b1, a_2b = _cmp(a, 2), _cmp(b, 1), _cmp(a, 2 * b)
    if b1 < 0 and a2 < 0:
        return EXTINCTION
    if a_2b > 0 and a2 > 0:
        return SPECIALISTS_WIN
    if a_2b < 0 and b1 > 0:
        return GENERALISTS_WIN
    if a_2b == 0 and a2 > 0:
        return NEUTRAL_LINE
    return BOUNDARY


def regime_grid(a_values, b_values) -> list[tuple]:
    return [(a, b, classify_regime(MeanFieldParams(a, b))) for a in a_values for b in b_values]


def escape_time(start, p: MeanFieldParams, centre, radius: float, t_max: float,
                h: float = 0.01):
    """First sampled time the trajectory is farther than ``radius`` (sup norm)
    from ``centre``, or None if it never leaves before ``t_max``."""
    c = np.array([float(v) for v in centre])

    def away(t, y):
        return np.max(np.abs(np.array(y) - c)) > radius

    times, states = integrate(start, p, t_max, h, every=10 ** 9, stop=away)
    return float(times[-1]) if away(times[-1], states[-1]) else None
