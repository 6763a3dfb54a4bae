"""Closure families: explicit polynomial moment functions mu_n(nu).

Each family packages
  * the normal variables nu (with family-specific aliases),
  * a constant symmetric metric g,
  * the moment polynomials mu_n as exact MultiPoly objects (mu_0 = 1),
  * the inhomogeneity measure gamma_n,
and, where meaningful, the maps between physical variables (stream
densities/velocities, contour velocities) and the normal variables.

Families: multi-delta (M cold streams), waterbag (piecewise-constant
distribution with fixed bag heights), the delta-derivative closure with
its anti-triangular moment system and explicit inversion, the four-field
closure with free parameter kappa, and a generic family generated from a
single cubic mu_2 by recurrence.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from itertools import combinations_with_replacement
from typing import Callable, Sequence

from . import ratmat
from .moments import DensityError, gamma_n
from .poly import MultiPoly


class Metric:
    """Constant symmetric rational metric with exact signature."""

    __slots__ = ("g", "_signature")

    def __init__(self, rows: Sequence[Sequence]):
        mat = ratmat.as_matrix(rows)
        if not ratmat.is_symmetric(mat):
            raise ValueError("metric must be symmetric")
        object.__setattr__(self, "g", mat)
        object.__setattr__(self, "_signature", None)

    def __setattr__(self, name, value):
        raise AttributeError("Metric is immutable")

    @property
    def dim(self) -> int:
        return len(self.g)

    @property
    def signature(self) -> tuple[int, int]:
        if self._signature is None:
            object.__setattr__(self, "_signature", ratmat.signature(self.g))
        return self._signature

    def inverse(self) -> ratmat.Matrix:
        return ratmat.inverse(self.g)

    def __eq__(self, other):
        return isinstance(other, Metric) and self.g == other.g

    def __repr__(self):
        return f"Metric({[list(map(str, row)) for row in self.g]})"


def quadratic_mu1(metric: Metric) -> MultiPoly:
    """mu_1 = (1/2) nu . g^-1 nu, the universal first centered moment."""
    n = metric.dim
    ginv = metric.inverse() if n else ()
    acc = MultiPoly.zero(n)
    for i in range(n):
        for j in range(n):
            if ginv[i][j]:
                acc = acc + Fraction(ginv[i][j], 2) * \
                    MultiPoly.variable(n, i) * MultiPoly.variable(n, j)
    return acc


class ClosureFamily:
    """Base class: caches mu_n / gamma_n and their compiled evaluators.

    Subclasses implement _mu(n) for n >= 1 and set name, nu_count,
    nu_names and metric in __init__. Instances are immutable by
    convention and safe to share.
    """

    def __init__(self, name: str, nu_names: Sequence[str], metric: Metric):
        self.name = name
        self.nu_names = tuple(nu_names)
        self.nu_count = len(self.nu_names)
        if metric.dim != self.nu_count:
            raise ValueError("metric dimension does not match variable count")
        self.metric = metric
        self._mu_cache: dict[int, MultiPoly] = {}
        self._gamma_cache: dict[int, MultiPoly] = {}
        self._compiled: dict[int, Callable] = {}

    @property
    def N(self) -> int:
        """Total fluid-variable count (rho, u, nu_1..nu_{N-2})."""
        return self.nu_count + 2

    def mu(self, n: int) -> MultiPoly:
        if n < 0:
            raise ValueError("moment index must be nonnegative")
        if n == 0:
            return MultiPoly.const(self.nu_count, 1)
        if n not in self._mu_cache:
            self._mu_cache[n] = self._mu(n)
        return self._mu_cache[n]

    def _mu(self, n: int) -> MultiPoly:
        raise NotImplementedError

    def gamma(self, n: int) -> MultiPoly:
        """(n+1) mu_n - nu . grad mu_n; zero for homogeneous families."""
        if n not in self._gamma_cache:
            self._gamma_cache[n] = gamma_n(self.mu(n), n)
        return self._gamma_cache[n]

    def mu_value(self, n: int, nu_values):
        """Fast numeric evaluation of mu_n (floats or numpy arrays)."""
        if n not in self._compiled:
            self._compiled[n] = self.mu(n).compile_float()
        return self._compiled[n](nu_values)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r} N={self.N}>"


# ---------------------------------------------------------------------------
# Multi-delta (multi-stream) family
# ---------------------------------------------------------------------------


def multidelta_mu(M: int, n: int) -> MultiPoly:
    """mu_n = sum_{k=2}^{M} xi_k eta_k^n over (xi_2..xi_M, eta_2..eta_M).

    M = 1 has no normal variables and every mu_n vanishes (cold limit)."""
    if M < 1:
        raise ValueError("need at least one stream")
    if n < 1:
        raise ValueError("moment index must be >= 1")
    nv = 2 * (M - 1)
    acc = MultiPoly.zero(nv)
    for k in range(M - 1):
        acc = acc + MultiPoly.variable(nv, k) * MultiPoly.variable(nv, M - 1 + k) ** n
    return acc


def _offdiag_block_metric(b: int) -> Metric:
    rows = [[Fraction(0)] * (2 * b) for _ in range(2 * b)]
    for i in range(b):
        rows[i][b + i] = rows[b + i][i] = Fraction(1)
    return Metric(rows)


class MultiDeltaClosure(ClosureFamily):
    def __init__(self, M: int):
        if M < 1:
            raise ValueError("need at least one stream")
        self.M = M
        names = [f"xi{k}" for k in range(2, M + 1)] + [f"eta{k}" for k in range(2, M + 1)]
        super().__init__(f"multidelta(M={M})", names, _offdiag_block_metric(M - 1))

    def _mu(self, n: int) -> MultiPoly:
        return multidelta_mu(self.M, n)


def _any_true(x) -> bool:
    return bool(x.any()) if hasattr(x, "any") else bool(x)


def multidelta_normal_map(a: Sequence, v: Sequence):
    """(a_1..a_M, v_1..v_M) -> (rho, u, xi_2..xi_M, eta_2..eta_M).

    rho = sum a, u = sum a_l v_l / rho, xi_k = a_k/rho, eta_k = (v_k - v_1)/rho.
    Works on scalars (Fractions) and on numpy arrays elementwise.
    """
    if len(a) != len(v):
        raise ValueError("a and v must have equal length")
    rho = sum(a[1:], a[0])
    if _any_true(rho <= 0):
        raise DensityError("total density must be positive")
    u = sum(ak * vk for ak, vk in zip(a, v)) / rho
    xi = tuple(ak / rho for ak in a[1:])
    eta = tuple((vk - v[0]) / rho for vk in v[1:])
    return rho, u, xi, eta


def multidelta_inverse_map(rho, u, xi: Sequence, eta: Sequence):
    """Inverse of multidelta_normal_map: recover (a_1..a_M, v_1..v_M)."""
    if len(xi) != len(eta):
        raise ValueError("xi and eta must have equal length")
    if _any_true(rho <= 0):
        raise DensityError("total density must be positive")
    mu1 = sum(xk * ek for xk, ek in zip(xi, eta)) if xi else 0
    v1 = u - rho * mu1
    a = [rho * (1 - sum(xi))] + [rho * xk for xk in xi]
    v = [v1] + [v1 + rho * ek for ek in eta]
    return tuple(a), tuple(v)


# ---------------------------------------------------------------------------
# Waterbag family
# ---------------------------------------------------------------------------


def _check_heights(a: Sequence[Fraction]) -> tuple[Fraction, ...]:
    a = tuple(Fraction(x) for x in a)
    N = len(a)
    if N < 2:
        raise ValueError("need at least two heights")
    if sum(a) != 0:
        raise ValueError("heights must sum to zero (compact support)")
    sigma = Fraction(0)
    for k in range(N - 1):
        sigma += a[k]
        if sigma == 0:
            raise ValueError(f"degenerate heights: partial sum sigma_{k + 1} = 0")
    if a[-1] == 0:
        raise ValueError("last height must be nonzero")
    return a


def _sigmas(a: Sequence[Fraction]) -> list[Fraction]:
    out, acc = [], Fraction(0)
    for x in a:
        acc += x
        out.append(acc)
    return out


def _wb_nu_poly(nv: int, l: int) -> MultiPoly:
    # boundary conventions nu_0 = 0, nu_{N-1} = 1
    if l == 0:
        return MultiPoly.zero(nv)
    if l == nv + 1:
        return MultiPoly.const(nv, 1)
    return MultiPoly.variable(nv, l - 1)


def waterbag_mu(a: Sequence, n: int) -> MultiPoly:
    """mu_n of the waterbag family as an exact polynomial in nu_1..nu_{N-2}.

    mu_n = ((-1)^n/(n+1)) ( sum_{k<N} a_k (1/(2a_N)
             + sum_{l=k}^{N-1} (nu_l - nu_{l-1})/sigma_l)^{n+1}
             + 1/(2^{n+1} a_N^n) ).
    """
    if n < 1:
        raise ValueError("moment index must be >= 1")
    a = _check_heights(a)
    N = len(a)
    nv = N - 2
    sigma = _sigmas(a)
    base = MultiPoly.const(nv, Fraction(1, 2 * a[-1]))
    # tails[k] = 1/(2aN) + sum_{l=k+1..N-1} (nu_l - nu_{l-1})/sigma_l, 0-based k
    tails = [base] * (N - 1)
    for k in range(N - 2, -1, -1):
        step = (_wb_nu_poly(nv, k + 1) - _wb_nu_poly(nv, k)) / sigma[k]
        tails[k] = (tails[k + 1] if k + 1 < N - 1 else base) + step
    acc = MultiPoly.const(nv, Fraction(1, 2 ** (n + 1) * a[-1] ** n))
    for k in range(N - 1):
        acc = acc + a[k] * tails[k] ** (n + 1)
    return acc * Fraction((-1) ** n, n + 1)


def waterbag_s(a: Sequence, n: int) -> MultiPoly:
    """S_n = -(1/(n+1)) sum_k a_k eta_k^{n+1}, the u-centered moments.

    eta_1 = (1/2) sum_{k>=2} a_k (sum_{l<k} (nu_l - nu_{l-1})/sigma_l)^2 and
    eta_k = eta_1 + sum_{l<k} (nu_l - nu_{l-1})/sigma_l; degree 2n, not
    homogeneous.
    """
    if n < 0:
        raise ValueError("moment index must be nonnegative")
    a = _check_heights(a)
    N = len(a)
    nv = N - 2
    sigma = _sigmas(a)
    # heads[k] = sum_{l=1..k} (nu_l - nu_{l-1})/sigma_l, 0-based entry k-1
    heads = [MultiPoly.zero(nv)]
    for l in range(N - 1):
        step = (_wb_nu_poly(nv, l + 1) - _wb_nu_poly(nv, l)) / sigma[l]
        heads.append(heads[-1] + step)
    eta1 = MultiPoly.zero(nv)
    for k in range(1, N):
        eta1 = eta1 + Fraction(a[k], 2) * heads[k] ** 2
    acc = MultiPoly.zero(nv)
    for k in range(N):
        acc = acc + a[k] * (eta1 + heads[k]) ** (n + 1)
    return acc * Fraction(-1, n + 1)


def waterbag_metric(a: Sequence) -> Metric:
    """Diagonal metric g_kk = -sigma_k sigma_{k+1} / a_{k+1}."""
    a = _check_heights(a)
    sigma = _sigmas(a)
    nv = len(a) - 2
    rows = [[Fraction(0)] * nv for _ in range(nv)]
    for k in range(nv):
        rows[k][k] = -sigma[k] * sigma[k + 1] / a[k + 1]
    return Metric(rows)


class WaterbagClosure(ClosureFamily):
    def __init__(self, heights: Sequence):
        a = _check_heights(heights)
        self.heights = a
        names = [f"nu{k}" for k in range(1, len(a) - 1)]
        super().__init__(f"waterbag(N={len(a)})", names, waterbag_metric(a))

    @property
    def Lambda(self) -> Fraction:
        return Fraction(-1, 2 * self.heights[-1])

    def _mu(self, n: int) -> MultiPoly:
        return waterbag_mu(self.heights, n)


def waterbag_normal_map(a: Sequence, v: Sequence):
    """Contour velocities (v_1..v_N) -> (rho, u, nu_1..nu_{N-2}).

    rho = -sum a_n v_n, u = -(1/(2 rho)) sum a_n v_n^2,
    nu_k = (1/rho) sum_{l<=k} sigma_l (v_{l+1} - v_l).
    """
    a = _check_heights(a)
    if len(v) != len(a):
        raise ValueError("v must have one entry per height")
    sigma = _sigmas(a)
    rho = -sum(ak * vk for ak, vk in zip(a, v))
    if _any_true(rho <= 0):
        raise DensityError("density must be positive")
    u = -sum(ak * vk * vk for ak, vk in zip(a, v)) / (2 * rho)
    nu = []
    acc = 0
    for k in range(len(a) - 2):
        acc = acc + sigma[k] * (v[k + 1] - v[k])
        nu.append(acc / rho)
    return rho, u, tuple(nu)


def waterbag_inverse_map(a: Sequence, rho, u, nu: Sequence):
    """Inverse map: recover the contour velocities from (rho, u, nu)."""
    a = _check_heights(a)
    N = len(a)
    if len(nu) != N - 2:
        raise ValueError("nu must have N-2 entries")
    if _any_true(rho <= 0):
        raise DensityError("density must be positive")
    sigma = _sigmas(a)
    nu_full = [0, *nu, 1]  # nu_0 = 0, nu_{N-1} = 1
    # partial sums sum_{l<k} (nu_l - nu_{l-1})/sigma_l for k = 1..N
    heads = [0]
    for l in range(N - 1):
        heads.append(heads[-1] + (nu_full[l + 1] - nu_full[l]) / sigma[l])
    v1 = u + (rho / 2) * sum(a[k] * heads[k] ** 2 for k in range(1, N))
    return tuple(v1 + rho * heads[k] for k in range(N))


def waterbag_psi(a: Sequence, v: Sequence):
    """psi = v_N/2 + rho/(2 a_N) = -(1/(2a_N)) sum_{n<N} a_n v_n."""
    a = _check_heights(a)
    return -sum(ak * vk for ak, vk in zip(a[:-1], v[:-1])) / (2 * a[-1])


# ---------------------------------------------------------------------------
# Delta-derivative (anti-triangular) family
# ---------------------------------------------------------------------------


def burby_mu(m: int, n: int) -> MultiPoly:
    """mu_n at level m by the recursion

      mu_m = nu_m^{m+1}/(m+1),
      mu_n(nu_n..nu_m) = sum_{k=0}^n C(n,k) nu_m^{n-k} mu_k^{(m-n-1)}(nu_{k+n}..nu_{m-1}),

    as a polynomial in the m variables nu_1..nu_m (homogeneous, degree n+1).
    """
    if not 1 <= n <= m:
        raise ValueError(f"need 1 <= n <= m, got n={n}, m={m}")
    cache: dict[tuple[int, tuple[int, ...]], MultiPoly] = {}

    def rec(l: int, args: tuple[int, ...]) -> MultiPoly:
        # args: global variable indices standing in for (nu_l, ..., nu_level)
        if not args or l < 0:
            return MultiPoly.zero(m)
        key = (l, args)
        if key not in cache:
            if len(args) == 1:
                out = MultiPoly.variable(m, args[0]) ** (l + 1) / (l + 1)
            else:
                last = MultiPoly.variable(m, args[-1])
                out = MultiPoly.variable(m, args[0]) * last ** l
                for k in range(1, l + 1):
                    sub = rec(k, args[k:-1])
                    if not sub.is_zero:
                        out = out + comb(l, k) * last ** (l - k) * sub
            cache[key] = out
        return cache[key]

    return rec(n, tuple(range(n - 1, m)))


def burby_mu_closed(m: int, n: int) -> MultiPoly:
    """Closed form: (1/(n+1)) sum over ordered tuples n <= i_1..i_{n+1} <= m
    with i_1+...+i_{n+1} = n(m+1) of nu_{i_1}...nu_{i_{n+1}}.

    For n >= 1 the result lives in the m variables nu_1..nu_m. The n = 0
    convention mu_0 = nu_0 (the density slot) returns the extra variable
    nu_0 in an (m+1)-variable ring.
    """
    if not 0 <= n <= m:
        raise ValueError(f"need 0 <= n <= m, got n={n}, m={m}")
    if n == 0:
        return MultiPoly.variable(m + 1, 0)
    target = n * (m + 1)
    acc = MultiPoly.zero(m)
    for combo in combinations_with_replacement(range(n, m + 1), n + 1):
        if sum(combo) != target:
            continue
        # count ordered tuples for this multiset
        mult = 1
        rem = n + 1
        for idx in set(combo):
            c = combo.count(idx)
            mult *= comb(rem, c)
            rem -= c
        exps = [0] * m
        for idx in combo:
            exps[idx - 1] += 1
        acc = acc + MultiPoly.monomial(m, exps, Fraction(mult, n + 1))
    return acc


def _nth_root_fraction(x: Fraction, k: int) -> Fraction:
    """Exact k-th root of a positive rational; raises if not a perfect power."""
    if x <= 0:
        raise ValueError("need a positive radicand")

    def iroot(v: int) -> int:
        r = round(v ** (1.0 / k))
        for c in (r - 1, r, r + 1):
            if c > 0 and c ** k == v:
                return c
        raise ValueError(f"{v} is not a perfect {k}-th power")

    return Fraction(iroot(x.numerator), iroot(x.denominator))


def burby_invert(mu_values: Sequence, m: int, branch: str = "plus",
                 exact: bool = False) -> tuple:
    """Invert the anti-triangular system: values (mu_1..mu_m) -> (nu_1..nu_m).

    nu_m = sgn(mu_m) ((m+1)|mu_m|)^{1/(m+1)}, then back-substitution
    nu_n = (mu_n - chi_n)/nu_m^n with chi_n = mu_n-polynomial at nu_n = 0.

    For odd m the leading moment must be positive on the default branch;
    branch='minus' applies the (-1)^n sign flip and serves mu_m < 0.
    With exact=True all inputs must be Fractions and (m+1)|mu_m| a perfect
    (m+1)-th power; the round trip is then exact.
    """
    if branch not in ("plus", "minus"):
        raise ValueError("branch must be 'plus' or 'minus'")
    mu_values = list(mu_values)
    if len(mu_values) != m:
        raise ValueError(f"expected {m} moment values")
    if branch == "minus":
        if m % 2 == 0:
            raise ValueError("the minus branch only applies to odd levels")
        mu_values = [(-1) ** n * v for n, v in enumerate(mu_values, start=1)]
    mu_m = mu_values[-1]
    if mu_m == 0:
        raise ValueError("singular leading moment mu_m = 0")
    if m % 2 == 1 and mu_m < 0:
        raise ValueError("negative leading moment on an odd level: "
                         "select the minus branch")
    if exact:
        if not all(isinstance(v, (int, Fraction)) for v in mu_values):
            raise ValueError("exact inversion needs rational moment values")
        mu_values = [Fraction(v) for v in mu_values]
        radic = (m + 1) * abs(mu_values[-1])
        nu_m = _nth_root_fraction(radic, m + 1)
        if mu_values[-1] < 0:
            nu_m = -nu_m
    else:
        s = 1 if mu_m > 0 else -1
        nu_m = s * (float((m + 1) * abs(mu_m))) ** (1.0 / (m + 1))
    if branch == "minus":
        # flipped system solved on the other sheet: take the negative root
        nu_m = -nu_m
    nu = [None] * m
    nu[m - 1] = nu_m
    for n in range(m - 1, 0, -1):
        vals = [0] * n + nu[n:]
        chi = burby_mu(m, n).eval(vals)
        nu[n - 1] = (mu_values[n - 1] - chi) / nu_m ** n
    return tuple(nu)


def _antidiag_metric(m: int, sign: int = 1) -> Metric:
    rows = [[Fraction(0)] * m for _ in range(m)]
    for i in range(m):
        rows[i][m - 1 - i] = Fraction(sign)
    return Metric(rows)


class BurbyClosure(ClosureFamily):
    """Level-m anti-triangular closure; mu_n = 0 for n >= m+1.

    branch='minus' (odd m only) is the sign-flipped copy with metric -g
    and mu_n -> (-1)^n mu_n, covering negative leading moments.
    """

    def __init__(self, m: int, branch: str = "plus"):
        if m < 1:
            raise ValueError("level must be >= 1")
        if branch not in ("plus", "minus"):
            raise ValueError("branch must be 'plus' or 'minus'")
        if branch == "minus" and m % 2 == 0:
            raise ValueError("the minus branch only applies to odd levels")
        self.m = m
        self.branch = branch
        names = [f"nu{k}" for k in range(1, m + 1)]
        sign = -1 if branch == "minus" else 1
        super().__init__(f"burby(m={m})" + ("-" if sign < 0 else ""),
                         names, _antidiag_metric(m, sign))

    def _mu(self, n: int) -> MultiPoly:
        if n > self.m:
            return MultiPoly.zero(self.m)
        p = burby_mu(self.m, n)
        if self.branch == "minus" and n % 2 == 1:
            p = -p
        return p

    def invert(self, mu_values: Sequence, exact: bool = False) -> tuple:
        return burby_invert(mu_values, self.m, branch=self.branch, exact=exact)


# ---------------------------------------------------------------------------
# Four-field family
# ---------------------------------------------------------------------------


def fourfield_family(kappa) -> dict:
    """The published four-field polynomials in (Gamma_2, Gamma_3):
    {'mu': [mu_1..mu_5], 'S': [S_2..S_5]}, exact for rational kappa."""
    k = Fraction(kappa)
    names = ("Gamma2", "Gamma3")
    g2 = MultiPoly.variable(2, 0)
    g3 = MultiPoly.variable(2, 1)
    mu = [
        g2 * g3,
        g2 ** 3 + k * g2 * g3 ** 2,
        k * g2 * g3 * (3 * g2 ** 2 + k * g3 ** 2),
        k * (Fraction(9, 5) * g2 ** 5 + 6 * k * g2 ** 3 * g3 ** 2
             + k ** 2 * g2 * g3 ** 4),
        k ** 2 * g2 * g3 * (9 * g2 ** 4 + 10 * k * g2 ** 2 * g3 ** 2
                            + k ** 2 * g3 ** 4),
    ]
    km = k - g2  # the combination (kappa - Gamma_2) recurs in every S_n
    S = [
        g2 ** 3 + g2 * km * g3 ** 2,
        g2 * g3 * km * (3 * g2 ** 2 + (km - g2) * g3 ** 2),
        Fraction(9, 5) * k * g2 ** 5 + 6 * g2 ** 3 * km ** 2 * g3 ** 2
        + g2 * km * (k ** 2 - 3 * g2 * km) * g3 ** 4,
        9 * k * g2 ** 5 * km * g3 + 10 * g2 ** 3 * km ** 3 * g3 ** 3
        + g2 * km * (km - g2) * (k ** 2 - 2 * k * g2 + 2 * g2 ** 2) * g3 ** 5,
    ]
    return {"mu": mu, "S": S, "names": names}


class FourFieldClosure(ClosureFamily):
    """N = 4 closure with free parameter kappa; mu_n for n >= 3 generated by
    mu_{n+1} = (1/(n+2)) (dmu_n/dG2 dmu_2/dG3 + dmu_n/dG3 dmu_2/dG2)."""

    def __init__(self, kappa):
        self.kappa = Fraction(kappa)
        super().__init__(f"fourfield(kappa={self.kappa})",
                         ("Gamma2", "Gamma3"), _offdiag_block_metric(1))

    def _mu(self, n: int) -> MultiPoly:
        g2 = MultiPoly.variable(2, 0)
        g3 = MultiPoly.variable(2, 1)
        if n == 1:
            return g2 * g3
        if n == 2:
            return g2 ** 3 + self.kappa * g2 * g3 ** 2
        prev = self.mu(n - 1)
        m2 = self.mu(2)
        return (prev.diff(0) * m2.diff(1) + prev.diff(1) * m2.diff(0)) / (n + 1)


# ---------------------------------------------------------------------------
# Generic family from a single cubic
# ---------------------------------------------------------------------------


class GenericClosure(ClosureFamily):
    """Closure generated from mu_2 by the recurrence

      mu_{n+1} = (1/(n+2)) [ grad mu_n . g . grad mu_2
                             + 2 mu_1 gamma_n + n mu_{n-1} gamma_2 ],

    with mu_1 = (1/2) nu . g^-1 nu fixed by the metric.  gamma_rule, if
    given, is a callable (n, mu) -> MultiPoly (mu being the moment
    accessor); by default gamma_n is computed from the generated mu_n.
    """

    def __init__(self, mu2: MultiPoly, metric: Metric,
                 gamma_rule: Callable | None = None, name: str = "generic"):
        names = [f"nu{k}" for k in range(1, metric.dim + 1)]
        super().__init__(name, names, metric)
        if mu2.nvars != metric.dim:
            raise ValueError("mu_2 variable count does not match the metric")
        self._mu2 = mu2
        self._gamma_rule = gamma_rule

    def gamma(self, n: int) -> MultiPoly:
        if self._gamma_rule is not None:
            if n not in self._gamma_cache:
                self._gamma_cache[n] = self._gamma_rule(n, self.mu)
            return self._gamma_cache[n]
        return super().gamma(n)

    def _mu(self, n: int) -> MultiPoly:
        if n == 1:
            return quadratic_mu1(self.metric)
        if n == 2:
            return self._mu2
        g = self.metric.g
        nv = self.nu_count
        prev = self.mu(n - 1)
        m2 = self.mu(2)
        acc = MultiPoly.zero(nv)
        for i in range(nv):
            for j in range(nv):
                if g[i][j]:
                    acc = acc + g[i][j] * prev.diff(i) * m2.diff(j)
        acc = acc + 2 * self.mu(1) * self.gamma(n - 1)
        acc = acc + (n - 1) * self.mu(n - 2) * self.gamma(2)
        return acc / (n + 1)


def waterbag_gamma_rule(Lambda) -> Callable:
    """gamma_n = Lambda^n - n Lambda mu_{n-1}, the waterbag inhomogeneity."""
    L = Fraction(Lambda)

    def rule(n: int, mu: Callable[[int], MultiPoly]) -> MultiPoly:
        return MultiPoly.const(mu(0).nvars, L ** n) - n * L * mu(n - 1)

    return rule


def generate_closure_from_mu2(mu2: MultiPoly, g: Metric,
                              gamma_rule: Callable | None = None,
                              n_max: int | None = None) -> list[MultiPoly]:
    """[mu_1 .. mu_{n_max}] generated from the cubic mu_2 and metric g.

    n_max defaults to 2 g.dim + 1, the highest index the bracket
    coefficients reference for a family with N = g.dim + 2 fields.
    """
    fam = GenericClosure(mu2, g, gamma_rule)
    if n_max is None:
        n_max = 2 * g.dim + 1
    return [fam.mu(n) for n in range(1, n_max + 1)]


class ColdClosure(ClosureFamily):
    """N = 2 cold fluid: no microscopic variables, all mu_n = 0 for n >= 1."""

    def __init__(self):
        super().__init__("cold", (), Metric(()))

    def _mu(self, n: int) -> MultiPoly:
        return MultiPoly.zero(0)


# ---------------------------------------------------------------------------
# Numeric inversion and the equation of state
# ---------------------------------------------------------------------------


def newton_invert(closure: ClosureFamily, mu_target: Sequence,
                  guess: Sequence | None = None,
                  tol: float = 1e-12, max_iter: int = 100) -> tuple:
    """Solve mu(nu) = mu_target by damped Newton iteration.

    The Jacobian is exact (polynomial differentiation); the step is halved
    until the residual norm decreases. Convergence is local: for families
    with several branches the caller should seed `guess` near the wanted
    branch.
    """
    nv = closure.nu_count
    target = [float(v) for v in mu_target]
    if len(target) != nv:
        raise ValueError(f"expected {nv} moment values")
    mus = [closure.mu(n) for n in range(1, nv + 1)]
    jac_polys = [[p.diff(k).compile_float() for k in range(nv)] for p in mus]
    funcs = [p.compile_float() for p in mus]

    if guess is None:
        scale = abs(target[1]) ** (1.0 / 3.0) if nv >= 2 and target[1] else 1e-3
        x = [scale] * nv
    else:
        x = [float(v) for v in guess]

    def residual(pt):
        return [f(pt) - t for f, t in zip(funcs, target)]

    def norm(r):
        return max(abs(v) for v in r)

    r = residual(x)
    for _ in range(max_iter):
        if norm(r) < tol:
            return tuple(x)
        J = [[jac_polys[i][k](x) for k in range(nv)] for i in range(nv)]
        step = _solve_float(J, [-v for v in r])
        lam = 1.0
        for _ in range(30):
            x_new = [xi + lam * si for xi, si in zip(x, step)]
            r_new = residual(x_new)
            if norm(r_new) < norm(r):
                break
            lam *= 0.5
        else:
            raise RuntimeError("Newton inversion stalled (no descent direction)")
        x, r = x_new, r_new
    if norm(r) < tol:
        return tuple(x)
    raise RuntimeError(f"Newton inversion did not converge (residual {norm(r):.3e})")


def _solve_float(A: list[list[float]], b: list[float]) -> list[float]:
    """Small dense solve with partial pivoting."""
    n = len(A)
    M = [row[:] + [bi] for row, bi in zip(A, b)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(M[r][col]))
        if abs(M[piv][col]) < 1e-300:
            raise RuntimeError("singular Jacobian in Newton step")
        M[col], M[piv] = M[piv], M[col]
        for r in range(col + 1, n):
            f = M[r][col] / M[col][col]
            if f:
                for c in range(col, n + 1):
                    M[r][c] -= f * M[col][c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        x[r] = (M[r][n] - sum(M[r][c] * x[c] for c in range(r + 1, n))) / M[r][r]
    return x


def equation_of_state(closure: ClosureFamily, mu_observed: Sequence,
                      guess: Sequence | None = None) -> tuple:
    """Closure relation: from observed (mu_1..mu_{N-2}) to the closed
    moments (mu_{N-1}..mu_{2N-3}).

    Inverts the normal-variable map (explicitly for the anti-triangular
    family, by Newton elsewhere), then evaluates the higher polynomials.
    """
    nv = closure.nu_count
    if isinstance(closure, BurbyClosure):
        nu = closure.invert(mu_observed)
    else:
        nu = newton_invert(closure, mu_observed, guess=guess)
    nu = [float(v) for v in nu]
    return tuple(closure.mu(n).eval(nu) for n in range(nv + 1, 2 * nv + 2))
