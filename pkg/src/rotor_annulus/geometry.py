"""Chord geometry of the annulus ``R <= |q| <= 1``.

``beta`` is always the angle between the velocity and the normal of the
*outer* circle at the outer end of a chord. A chord with this angle has
impact parameter ``sin(beta)`` and meets the inner circle iff
``|sin beta| < R``.

All functions accept scalars or numpy arrays.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import Unreachable

#: radicands ``R^2 - sin^2 beta`` above ``-GRAZING_SLACK`` are clamped to 0
GRAZING_SLACK = 1e-14


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def wrap_angle(a):
    """Reduce radians to ``(-pi, pi]``."""
    return _out(math.pi - np.mod(math.pi - np.asarray(a, dtype=float), 2.0 * math.pi))


def wrap_unit(a):
    """Reduce normalised angles (turns) to ``(-1/2, 1/2]``."""
    return _out(0.5 - np.mod(0.5 - np.asarray(a, dtype=float), 1.0))


def _radicand(beta, R):
    s = np.sin(beta)
    rad = R * R - s * s
    if np.any(rad < -GRAZING_SLACK):
        raise Unreachable(f"|sin beta| > R={R!r}: chord misses the inner scatterer")
    return s, np.maximum(rad, 0.0)


def beta_hat(beta, R):
    """Angular separation between the outer and inner ends of a chord."""
    beta = np.asarray(beta, dtype=float)
    s, _ = _radicand(beta, R)
    return _out(np.arcsin(np.clip(s / R, -1.0, 1.0)) - beta)


def chord_length(beta, R):
    """Length of the chord from the outer circle to the inner circle."""
    beta = np.asarray(beta, dtype=float)
    _, rad = _radicand(beta, R)
    return _out(np.cos(beta) - np.sqrt(rad))


def fiber_advance(beta, beta2, R):
    """Outer-to-outer angular advance via one inner bounce, in ``(-pi, pi]``."""
    return wrap_angle(np.asarray(beta_hat(beta, R)) + np.asarray(beta_hat(beta2, R)))


def miss_advance(beta_out):
    """Angular advance of an outer-to-outer chord that misses the inner disc."""
    return wrap_angle(math.pi - 2.0 * np.asarray(beta_out, dtype=float))


def outer_angle_from_inner(vt, vn, R):
    """Outer-normal angle of a chord given its components at the inner wall.

    Angular momentum is conserved in free flight, so the impact parameter
    ``R sin(beta_inner)`` equals ``sin(beta_outer)``.
    """
    beta_in = np.arctan2(vt, vn)
    return _out(np.arcsin(R * np.sin(beta_in)))
