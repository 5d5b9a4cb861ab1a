"""Recompute every residual of a stored spectral point from its raw fields."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dirac import default_r_grid, dirac_residual
from .spectra import (
    SpectralPoint,
    build_kernel_system,
    compatibility_check,
    energy_from_x0,
    ode_residuals,
    primed_params,
    qes_params,
    reconstruct_P,
    sigma_min,
)

IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class CheckRow:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.value) and self.value < self.tol


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale else 0.0


def _trailing_degree(coeffs) -> int:
    for k in range(len(coeffs) - 1, -1, -1):
        if coeffs[k] != 0:
            return k
    return -1


def check_point(point: SpectralPoint, tol: float = 1e-8) -> list[CheckRow]:
    """Independent re-derivation of a point; stored residuals are ignored."""
    ctx = point.ctx
    n = ctx.n
    rows: list[CheckRow] = []

    def add(name, value, t=tol):
        rows.append(CheckRow(name, float(value), t))

    en = energy_from_x0(ctx, point.x0)
    for name, stored, fresh in (("t", point.t, en.t), ("E", point.E, en.E), ("lB", point.lB, en.lB), ("eB", point.eB, en.eB)):
        add(f"{name} = f(x0)", _rel(stored, fresh), IDENTITY_TOL)
    add("lB > 0", 0.0 if point.lB > 0 else 1.0, 0.5)
    add("x0 (E+m) lB = Z alpha", _rel(point.x0 * (point.E + ctx.m) * point.lB, ctx.zalpha), IDENTITY_TOL)

    b0, b, c = qes_params(ctx, point.x0, point.E, point.lB)
    for name, stored, fresh in (("b0", point.b0, b0), ("b", point.b, b), ("c", point.c, c)):
        add(f"{name} definition", abs(stored - fresh) / (abs(fresh) + abs(point.x0) + abs(b0)), IDENTITY_TOL)
    mag = abs(point.b) + abs(point.c) + abs(point.b0) + abs(point.x0)
    add("b - c = b0 - x0", abs(point.b - point.c - point.b0 + point.x0) / mag, IDENTITY_TOL)
    add("L Gamma = (Z alpha)^2", _rel(ctx.L * ctx.Gamma, ctx.zalpha**2), IDENTITY_TOL)
    x0p, bp, cp = primed_params(ctx, point.x0, point.E, point.lB, point.b0)
    for name, stored, fresh in (("x0'", point.x0p, x0p), ("b'", point.bp, bp), ("c'", point.cp, cp)):
        add(f"{name} definition", _rel(stored, fresh), IDENTITY_TOL)

    r_eps, r_b, r_x = compatibility_check(point)
    add("epsilon' = n + 1", r_eps, IDENTITY_TOL)
    add("epsilon = n", abs(point.epsilon - n), 0.5)
    add("b' - c' = b - c + x0", r_b, IDENTITY_TOL)
    add("x0 x0' = (Z alpha)^2/(Gamma+n+1)", r_x, IDENTITY_TOL)

    ks = build_kernel_system(ctx, point.x0)
    Q = np.array(point.Qcoeffs, dtype=float)
    if Q.size != n + 1:
        add("Q has n+1 coefficients", 1.0, 0.5)
    else:
        num = ks.rows @ Q
        den = ks.scale @ np.abs(Q)
        res = np.where(den > 0, np.abs(num) / np.where(den > 0, den, 1.0), 0.0)
        add("kernel_r0", res[0])
        add("kernel_r1", res[1])
        add("kernel rows j>=2", float(res[2:].max()) if n >= 1 else 0.0)
    add("sigma_min", sigma_min(ks))
    add("degree(Q) = n", abs(_trailing_degree(point.Qcoeffs) - n), 0.5)
    add("degree(P) = n + 1", abs(_trailing_degree(point.Pcoeffs) - (n + 1)), 0.5)
    if n >= 1 and Q.size == n + 1:
        add("a_{n-1} = -(b-c) a_n", abs(Q[n - 1] + (b - c) * Q[n]) / (abs(Q[n - 1]) + abs(b - c) * abs(Q[n])))

    P, rem = reconstruct_P(ctx, point.x0, point.E, point.lB, point.Qcoeffs)
    add("divis_rem", rem)
    if len(P) == len(point.Pcoeffs):
        scale = max(abs(v) for v in P)
        add("P matches Q", max(abs(a - b) for a, b in zip(P, point.Pcoeffs)) / scale)
    else:
        add("P matches Q", 1.0)

    ode_q, ode_p = ode_residuals(ctx, point)
    add("ode_Q", ode_q)
    add("ode_P", ode_p)
    try:
        add("dirac_max", dirac_residual(ctx, point, default_r_grid(point)).dirac_max)
    except (ArithmeticError, ValueError):
        add("dirac_max", math.inf)
    return rows
