"""
Closed-form regret bounds and the radii used by the trace invariants.

Each function evaluates the printed formula term by term; nothing here is
tightened or simplified.
"""

import math

from bandit.errors import InvalidArgumentError


def _check_delta(delta: float):
    if not 0.0 < delta < 1.0:
        raise InvalidArgumentError(f"delta must lie in (0, 1), got {delta}")


def theorem1_bound(d: int, T: int, nu: float, delta: float, epsilon: float, G: float, D: float) -> float:
    """4 d sqrt(nu T ln(1/delta)) + 2 d T (nu + 2 sqrt(nu)) ((1-delta)/delta) eps + delta G D T + 2 T eps"""
    _check_delta(delta)
    return (4.0 * d * math.sqrt(nu * T * math.log(1.0 / delta))
            + 2.0 * d * T * (nu + 2.0 * math.sqrt(nu)) * ((1.0 - delta) / delta) * epsilon
            + delta * G * D * T
            + 2.0 * T * epsilon)


def theorem2_constant(T: int, G: float, D: float) -> int:
    """C = ceil(ln GD) * ceil(ln((GD)^2 T))"""
    gd = G * D
    first = math.ceil(math.log(gd)) if gd > 0 else 0
    if first <= 0:
        raise InvalidArgumentError(
            f"ceil(ln GD) = {first} <= 0 for GD = {gd:.6g}; the high-probability bound degenerates for GD <= 1"
        )
    return first * math.ceil(math.log(gd * gd * T))


def theorem2_bound(d: int, T: int, nu: float, delta: float, epsilon: float,
                   G: float, D: float, gamma: float) -> float:
    """Theorem-1 terms plus C (2 G D ln(C/gamma) + (1 + eps) sqrt(8 T ln(C/gamma)))"""
    if not 0.0 < gamma < 1.0:
        raise InvalidArgumentError(f"gamma must lie in (0, 1), got {gamma}")
    C = theorem2_constant(T, G, D)
    log_term = math.log(C / gamma)
    return (theorem1_bound(d, T, nu, delta, epsilon, G, D)
            + C * (2.0 * G * D * log_term + (1.0 + epsilon) * math.sqrt(8.0 * T * log_term)))


def lemma8_bound(eta: float, d: int, T: int, nu: float, delta: float, epsilon: float, G: float, D: float) -> float:
    """Bound on the iterate regret sum theta_t.x_t - sum theta_t.x*"""
    _check_delta(delta)
    if not eta > 0:
        raise InvalidArgumentError(f"eta must be positive, got {eta}")
    return (4.0 * eta * d * d * T
            + nu * math.log(1.0 / delta) / eta
            + 2.0 * d * T * (nu + 2.0 * math.sqrt(nu)) * ((1.0 - delta) / delta) * epsilon
            + delta * D * G * T)


def blackbox_bound(d: int, T: int, nu: float, delta: float, epsilon: float, G: float, D: float) -> float:
    """Upper bound on f(x_hat) - min f after T oracle queries (online-to-offline conversion)"""
    _check_delta(delta)
    return (4.0 * d * math.sqrt(nu * math.log(1.0 / delta)) / math.sqrt(T)
            + delta * G * D
            + d * (nu + 2.0 * math.sqrt(nu)) * ((1.0 - delta) / delta) * epsilon
            + 2.0 * epsilon)


def blackbox_lower_bound(epsilon: float) -> float:
    return 2.0 * epsilon


def lemma4_radius(delta: float, nu: float) -> float:
    """Local-norm diameter of the shrunk slice: 2 (1/delta - 1)(nu + 2 sqrt(nu))"""
    _check_delta(delta)
    return 2.0 * (1.0 / delta - 1.0) * (nu + 2.0 * math.sqrt(nu))


def lemma5_radius(d: int, eta: float) -> float:
    """Iterate movement radius 4 d eta"""
    return 4.0 * d * eta
