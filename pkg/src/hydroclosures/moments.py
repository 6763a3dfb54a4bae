"""Conversions among the moment hierarchies P_n, S_n and mu_n.

The fluid moments P_n, the moments S_n centered around the fluid velocity
u, and the moments mu_n centered around psi = u - rho*mu_1 are related by
binomial re-centering sums.  All conversion formulas here are written
over generic scalars, so one implementation serves three regimes:

  * exact Fractions (identity tests),
  * MultiPoly values (symbolic identity checks),
  * floats / numpy arrays (simulation diagnostics).

Also houses the inhomogeneity measure gamma_n and the construction of the
microscopic bracket coefficients (alpha, beta) in the mu-variables,
expressed as polynomials in the normal variables of a closure family.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from numbers import Real
from typing import Sequence

from .poly import MultiPoly


class DensityError(ValueError):
    """Raised when a nonpositive density reaches a formula that divides by it."""


def _require_positive_density(rho) -> None:
    if isinstance(rho, (Real, Fraction)):
        if rho <= 0:
            raise DensityError(f"density must be positive, got {rho}")
    elif hasattr(rho, "__le__") and hasattr(rho, "any"):
        # numpy array
        if (rho <= 0).any():
            raise DensityError("density must be positive everywhere")


@dataclass(frozen=True)
class CenteredMoments:
    """Moments centered around u (kind 'S') or around psi (kind 'mu').

    For kind 'S' the values are (S_2, S_3, ...): S_0 = 1 and S_1 = 0 hold
    by construction and are never stored.  For kind 'mu' the values are
    (mu_1, mu_2, ...): mu_0 = 1 is implicit.
    """

    kind: str  # 'S' or 'mu'
    values: tuple
    rho: object
    center: object  # u for kind 'S', psi for kind 'mu'

    def __post_init__(self):
        if self.kind not in ("S", "mu"):
            raise ValueError(f"kind must be 'S' or 'mu', got {self.kind!r}")


def s_from_p(P: Sequence):
    """(rho, u, S) from the raw moments P_0..P_{N-1}.

    S_n = rho^-(n+1) * sum_k C(n,k) (-u)^(n-k) P_k  for n = 2..N-1.
    """
    rho = P[0]
    _require_positive_density(rho)
    u = P[1] / rho
    values = []
    for n in range(2, len(P)):
        acc = sum(comb(n, k) * (-u) ** (n - k) * P[k] for k in range(n + 1))
        values.append(acc / rho ** (n + 1))
    return rho, u, CenteredMoments("S", tuple(values), rho, u)


def p_from_s(rho, u, S: CenteredMoments | Sequence) -> tuple:
    """Raw moments P_n = sum_k C(n,k) rho^(k+1) u^(n-k) S_k (S_0=1, S_1=0)."""
    _require_positive_density(rho)
    vals = S.values if isinstance(S, CenteredMoments) else tuple(S)
    s_full = [1, 0, *vals]
    P = []
    for n in range(len(s_full)):
        P.append(sum(comb(n, k) * rho ** (k + 1) * u ** (n - k) * s_full[k]
                     for k in range(n + 1)))
    return tuple(P)


def mu_from_p(P: Sequence, psi) -> CenteredMoments:
    """mu_n = rho^-(n+1) * sum_k C(n,k) P_k (-psi)^(n-k) for n = 1..N-1."""
    rho = P[0]
    _require_positive_density(rho)
    values = []
    for n in range(1, len(P)):
        acc = sum(comb(n, k) * P[k] * (-psi) ** (n - k) for k in range(n + 1))
        values.append(acc / rho ** (n + 1))
    return CenteredMoments("mu", tuple(values), rho, psi)


def p_from_mu(rho, psi, mu: CenteredMoments | Sequence) -> tuple:
    """Raw moments P_n = sum_k C(n,k) mu_k rho^(k+1) psi^(n-k) (mu_0=1)."""
    _require_positive_density(rho)
    vals = mu.values if isinstance(mu, CenteredMoments) else tuple(mu)
    mu_full = [1, *vals]
    P = []
    for n in range(len(mu_full)):
        P.append(sum(comb(n, k) * mu_full[k] * rho ** (k + 1) * psi ** (n - k)
                     for k in range(n + 1)))
    return tuple(P)


def s_from_mu(mu: CenteredMoments | Sequence) -> tuple:
    """Re-centering from psi to u: S_n = sum_k C(n,k) (-mu_1)^(n-k) mu_k."""
    vals = mu.values if isinstance(mu, CenteredMoments) else tuple(mu)
    mu_full = [1, *vals]
    mu1 = mu_full[1]
    out = []
    for n in range(2, len(mu_full)):
        out.append(sum(comb(n, k) * (-mu1) ** (n - k) * mu_full[k]
                       for k in range(n + 1)))
    return tuple(out)


def gamma_n(mu_poly: MultiPoly, n: int) -> MultiPoly:
    """gamma_n = (n+1) mu_n - nu_k dmu_n/dnu_k; zero iff mu_n is homogeneous
    of degree n+1."""
    acc = (n + 1) * mu_poly
    for k in range(mu_poly.nvars):
        acc = acc - MultiPoly.variable(mu_poly.nvars, k) * mu_poly.diff(k)
    return acc


def mu_alpha_entry(closure, n: int, m: int) -> MultiPoly:
    """alpha_nm = (n+m) mu_{n+m-1} - m mu_{m-1} gamma_n - n mu_{n-1} gamma_m,
    as a polynomial in the closure's normal variables."""
    return ((n + m) * closure.mu(n + m - 1)
            - m * closure.mu(m - 1) * closure.gamma(n)
            - n * closure.mu(n - 1) * closure.gamma(m))


def mu_beta_entry(closure, n: int, m: int, k: int) -> MultiPoly:
    """Coefficient of d_x nu_k in
    beta_nm = n d_x mu_{n+m-1} - n gamma_m d_x mu_{n-1} - m mu_{m-1} d_x gamma_n.

    The derivative-index convention (n multiplies d_x mu_{n+m-1}) follows the
    form the raw-moment bracket takes; the chain rule turns each d_x mu into
    sum_k (dmu/dnu_k) d_x nu_k.
    """
    return (n * closure.mu(n + m - 1).diff(k)
            - n * closure.gamma(m) * closure.mu(n - 1).diff(k)
            - m * closure.mu(m - 1) * closure.gamma(n).diff(k))


def alpha_beta_in_mu(closure, size: int | None = None):
    """The microscopic hydrodynamic bracket of a closure in mu-variables,
    with every entry expressed as a polynomial in the normal variables."""
    from .bracket import HydroBracket  # deferred: bracket imports this module

    if size is None:
        size = closure.nu_count
    alpha = [[mu_alpha_entry(closure, n, m) for m in range(1, size + 1)]
             for n in range(1, size + 1)]
    beta = [[[mu_beta_entry(closure, n, m, k) for k in range(closure.nu_count)]
             for m in range(1, size + 1)]
            for n in range(1, size + 1)]
    return HydroBracket(nfields=size, alpha=alpha, beta=beta,
                        nderiv=closure.nu_count)
