"""Radial spinor components and the first-order radial Dirac system.

F and G are assembled as x^gamma exp(-x^2/4) Q(x) and the same with P(x),
with x = r / lB. The constant lB^gamma is dropped; every residual here is
normalised, so the overall scale is irrelevant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectra import PhysicalContext, SpectralPoint, polyder, polyval


@dataclass(frozen=True)
class WavefunctionSample:
    r: float
    x: float
    F: float
    G: float


@dataclass(frozen=True)
class DiracResidual:
    dirac_max: float
    fd_max: float
    worst_r: float


def _envelope(ctx: PhysicalContext, x: float) -> float:
    return x**ctx.gamma * math.exp(-0.25 * x * x)


def assemble_FG(ctx: PhysicalContext, point: SpectralPoint, r: float) -> tuple[float, float]:
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    x = r / point.lB
    env = _envelope(ctx, x)
    return env * polyval(point.Qcoeffs, x), env * polyval(point.Pcoeffs, x)


def _derivatives(ctx: PhysicalContext, point: SpectralPoint, r: float) -> tuple[float, float]:
    """dF/dr and dG/dr by the product rule on the factorised form."""
    lB = point.lB
    x = r / lB
    env = _envelope(ctx, x)
    log_slope = ctx.gamma / x - 0.5 * x
    dF = env * (log_slope * polyval(point.Qcoeffs, x) + polyval(polyder(point.Qcoeffs), x)) / lB
    dG = env * (log_slope * polyval(point.Pcoeffs, x) + polyval(polyder(point.Pcoeffs), x)) / lB
    return dF, dG


def _ratio(terms: Sequence[float]) -> float:
    den = math.fsum(abs(t) for t in terms)
    return abs(math.fsum(terms)) / den if den else 0.0


def dirac_terms(ctx: PhysicalContext, point: SpectralPoint, r: float) -> tuple[list[float], list[float]]:
    """Additive terms of both radial equations at r."""
    F, G = assemble_FG(ctx, point, r)
    dF, dG = _derivatives(ctx, point, r)
    j = ctx.l + 0.5
    half_field = 0.5 * point.eB * r
    eq1 = [dF, -j / r * F, -half_field * F, (point.E + ctx.m) * G, ctx.zalpha / r * G]
    eq2 = [dG, j / r * G, half_field * G, -(point.E - ctx.m) * F, -ctx.zalpha / r * F]
    return eq1, eq2


def dirac_residual(ctx: PhysicalContext, point: SpectralPoint, r_grid: Sequence[float], fd_rel: float = 1e-6) -> DiracResidual:
    """Max normalised residual of the radial system over r_grid.

    The analytic derivatives are also compared with central differences of
    step ``fd_rel * r``; a disagreement beyond 1e-6 raises.
    """
    worst, worst_r, fd_worst = 0.0, math.nan, 0.0
    for r in r_grid:
        r = float(r)
        if not (r > 0 and math.isfinite(r)):
            raise ValueError(f"bad radius {r!r}")
        eq1, eq2 = dirac_terms(ctx, point, r)
        if not all(math.isfinite(t) for t in eq1 + eq2):
            raise FloatingPointError(f"non-finite term at r = {r!r}")
        res = max(_ratio(eq1), _ratio(eq2))
        if res > worst:
            worst, worst_r = res, r

        h = fd_rel * r
        Fp, Gp = assemble_FG(ctx, point, r + h)
        Fm, Gm = assemble_FG(ctx, point, r - h)
        dF, dG = _derivatives(ctx, point, r)
        # compare against the size of the terms the derivative balances
        scale1 = math.fsum(abs(t) for t in eq1)
        scale2 = math.fsum(abs(t) for t in eq2)
        for fd, an, sc in (((Fp - Fm) / (2 * h), dF, scale1), ((Gp - Gm) / (2 * h), dG, scale2)):
            if sc > 0:
                fd_worst = max(fd_worst, abs(fd - an) / sc)
    if fd_worst > 1e-6:
        raise ArithmeticError(f"analytic and finite-difference derivatives disagree: {fd_worst:.3g}")
    return DiracResidual(worst, fd_worst, worst_r)


def default_r_grid(point: SpectralPoint, count: int = 64) -> np.ndarray:
    return np.geomspace(0.1 * point.lB, 10.0 * point.lB, count)


def sample_table(ctx: PhysicalContext, point: SpectralPoint, r_max: float, count: int) -> list[WavefunctionSample]:
    if not (r_max > 0 and math.isfinite(r_max)) or count < 2:
        raise ValueError("need r_max > 0 and count >= 2")
    rows = []
    for r in np.geomspace(r_max / 1000.0, r_max, count):
        r = float(r)
        F, G = assemble_FG(ctx, point, r)
        rows.append(WavefunctionSample(r, r / point.lB, F, G))
    return rows
