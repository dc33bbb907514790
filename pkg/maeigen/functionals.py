"""Energy, mass integral, Rayleigh quotient and the Cegrell-inequality check.

All integrals use the midpoint rule over the interior nodes (value times
``h**n``), the same quadrature that gives the discrete operator its
per-node mass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from maeigen.domain_grid import MeasureSpec
from maeigen.errors import InvalidSpec, ZeroFunction
from maeigen.ma_operator import GridFunction, ma_apply


@dataclass(frozen=True)
class FunctionalReport:
    E: float
    I: float  # noqa: E741
    R: float
    lambda_hat: float


@dataclass(frozen=True)
class CegrellReport:
    lhs: float
    rhs: float
    slack: float


def _density(u: GridFunction, nu: MeasureSpec | np.ndarray | float) -> np.ndarray:
    if isinstance(nu, MeasureSpec):
        return nu.density(u.grid)
    return np.broadcast_to(np.asarray(nu, dtype=float), (u.grid.n_nodes,))


def energy(u: GridFunction, ma_values: np.ndarray | None = None) -> float:
    """``E(u) = sum (-u) M(u) h^n``; pass ``ma_values`` to reuse an operator evaluation."""
    if ma_values is None:
        ma_values = ma_apply(u).values
    return u.grid.integrate(-u.values * ma_values)


def mass_integral(u: GridFunction, nu: MeasureSpec | np.ndarray | float) -> float:
    """``I(u) = sum (-u)^(n+1) nu h^n``."""
    n = u.grid.dimension
    return u.grid.integrate(np.power(-u.values, n + 1) * _density(u, nu))


def rayleigh(
    u: GridFunction,
    nu: MeasureSpec | np.ndarray | float,
    ma_values: np.ndarray | None = None,
) -> FunctionalReport:
    """Rayleigh quotient ``R = E/I`` and the eigenvalue estimate ``R**(1/n)``."""
    if u.sup_norm == 0.0:
        raise ZeroFunction("Rayleigh quotient of the zero function")
    n = u.grid.dimension
    e_val = energy(u, ma_values)
    i_val = mass_integral(u, nu)
    if not i_val > 0:
        raise InvalidSpec(f"mass integral is not positive ({i_val:.3e}); is u <= 0 and nu nonzero?")
    ratio = e_val / i_val
    return FunctionalReport(E=e_val, I=i_val, R=ratio, lambda_hat=float(max(ratio, 0.0) ** (1.0 / n)))


def cegrell_check(u: GridFunction, v: GridFunction) -> CegrellReport:
    """Compare ``sum (-u) M(v) h^n`` with ``E(u)^(1/(n+1)) E(v)^(n/(n+1))``; report only."""
    n = u.grid.dimension
    ma_v = ma_apply(v).values
    lhs = u.grid.integrate(-u.values * ma_v)
    if u is v or np.array_equal(u.values, v.values):
        rhs = lhs
    else:
        e_u = energy(u)
        e_v = u.grid.integrate(-v.values * ma_v)
        rhs = float(e_u ** (1.0 / (n + 1)) * e_v ** (n / (n + 1)))
    if rhs == 0.0:
        slack = 1.0 if lhs == 0.0 else float("inf")
    else:
        slack = lhs / rhs
    return CegrellReport(lhs=lhs, rhs=rhs, slack=slack)
