"""Conservative 1D periodic solver for the closed fluid system and the
multi-stream kinetic reference model.

Fields live on a uniform periodic grid. Spatial derivatives are
pseudo-spectral with a 2/3 dealiasing mask (default) or 2nd-order central
differences. The electric field comes from the spectral Poisson solve
with a neutralizing background and zero-mean gauge.

Two time steppers:

  * rk4: classical four-stage step on the full right-hand side in the
    working variables (rho, u, nu_k).
  * split: Strang composition in the flat extensive variables
    (rho, psi = u - rho*mu_1, m_k = rho*nu_k).  The microscopic block is
    diagonalized by an exact congruence of the metric, giving one
    flux-form sub-flow per diagonal entry; each sub-flow conserves its
    own integral to round-off, so the Casimirs integral(rho*nu_k) are
    preserved far better than the scheme's formal order.

Energies and Casimirs are diagnosed with the uniform-grid quadrature
sum(f)*dx, which is exact for trigonometric polynomials.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import ratmat
from .closures import ClosureFamily

RHO_FLOOR = 1e-12
WAVE_BREAK_SLOPE = -1e3


class SimulationError(RuntimeError):
    pass


class WaveBreakError(SimulationError):
    """Raised when a stream velocity develops a near-vertical gradient."""


# ---------------------------------------------------------------------------
# Grid and states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    L: float
    nx: int
    method: str = "spectral"  # or "fd2"

    def __post_init__(self):
        if self.nx < 8:
            raise ValueError("need at least 8 cells")
        if self.method not in ("spectral", "fd2"):
            raise ValueError("method must be 'spectral' or 'fd2'")

    @property
    def dx(self) -> float:
        return self.L / self.nx

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.rfftfreq(self.nx, d=self.dx)

    def deriv(self, f: np.ndarray) -> np.ndarray:
        """d/dx with 2/3 dealiasing (spectral) or central differences."""
        if self.method == "fd2":
            return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2 * self.dx)
        fh = np.fft.rfft(f, axis=-1)
        k = self.k
        fh = fh * (1j * k)
        cut = int((2.0 / 3.0) * (self.nx // 2))
        fh[..., cut + 1:] = 0.0
        return np.fft.irfft(fh, n=self.nx, axis=-1)

    def integral(self, f: np.ndarray) -> float:
        return float(np.sum(f, axis=-1) * self.dx)


@dataclass
class FieldState:
    rho: np.ndarray           # (nx,)
    u: np.ndarray             # (nx,)
    nu: np.ndarray            # (N-2, nx)
    n0: float
    t: float = 0.0

    def copy(self) -> "FieldState":
        return FieldState(self.rho.copy(), self.u.copy(), self.nu.copy(),
                          self.n0, self.t)


@dataclass
class StreamState:
    a: np.ndarray             # (M, nx) stream densities
    v: np.ndarray             # (M, nx) stream velocities
    n0: float
    t: float = 0.0

    def copy(self) -> "StreamState":
        return StreamState(self.a.copy(), self.v.copy(), self.n0, self.t)


@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    H: float
    C_mass: float
    C_psi: float
    C_nu: tuple
    momentum: float
    field_energy: float

    def row(self) -> list:
        return [self.t, self.H, self.C_mass, self.C_psi,
                *self.C_nu, self.momentum, self.field_energy]


# ---------------------------------------------------------------------------
# Electric field
# ---------------------------------------------------------------------------


def poisson_solve(rho: np.ndarray, n0: float, grid: Grid) -> np.ndarray:
    """E with dE/dx = rho - n0, periodic, zero mean.

    Requires neutrality mean(rho) = n0 to 1e-10 (otherwise no periodic E
    exists)."""
    if abs(float(np.mean(rho)) - n0) > 1e-10:
        raise SimulationError("neutrality violated: mean(rho) != n0")
    fh = np.fft.rfft(rho - n0)
    k = grid.k
    Eh = np.zeros_like(fh)
    Eh[1:] = fh[1:] / (1j * k[1:])
    return np.fft.irfft(Eh, n=grid.nx)


def electric_potential(rho: np.ndarray, n0: float, grid: Grid) -> np.ndarray:
    """phi with d^2phi/dx^2 = -(rho - n0), E = -dphi/dx, zero mean."""
    if abs(float(np.mean(rho)) - n0) > 1e-10:
        raise SimulationError("neutrality violated: mean(rho) != n0")
    fh = np.fft.rfft(rho - n0)
    k = grid.k
    ph = np.zeros_like(fh)
    ph[1:] = fh[1:] / k[1:] ** 2
    return np.fft.irfft(ph, n=grid.nx)


# ---------------------------------------------------------------------------
# Compiled closure evaluation
# ---------------------------------------------------------------------------


class _ClosureTables:
    """Per-closure compiled evaluators for mu_1, mu_2 and their gradients."""

    # value keeps the closure alive so ids are never recycled mid-session
    _cache: dict[int, tuple[ClosureFamily, "_ClosureTables"]] = {}

    def __init__(self, closure: ClosureFamily):
        nv = closure.nu_count
        self.nv = nv
        self.g = np.array([[float(x) for x in row] for row in closure.metric.g],
                          dtype=float).reshape(nv, nv)
        mu1, mu2 = closure.mu(1), closure.mu(2)
        self.mu1 = mu1.compile_float()
        self.mu2 = mu2.compile_float()
        self.dmu1 = [mu1.diff(k).compile_float() for k in range(nv)]
        self.dmu2 = [mu2.diff(k).compile_float() for k in range(nv)]
        gam2 = closure.gamma(2)
        self.gamma2 = gam2.compile_float()
        # exact congruence T^t g T = diag(d) for the split scheme
        if nv:
            T, d = ratmat.congruence_diagonalize(closure.metric.g)
            self.T = np.array([[float(x) for x in row] for row in T])
            self.Tinv = np.array([[float(x) for x in row]
                                  for row in ratmat.inverse(T)])
            self.D = np.array([float(x) for x in d])
        else:
            self.T = self.Tinv = np.zeros((0, 0))
            self.D = np.zeros(0)

    @classmethod
    def of(cls, closure: ClosureFamily) -> "_ClosureTables":
        key = id(closure)
        if key not in cls._cache:
            cls._cache[key] = (closure, cls(closure))
        return cls._cache[key][1]


def _check_state(state: FieldState):
    if np.any(state.rho < RHO_FLOOR):
        raise SimulationError(f"density fell below {RHO_FLOOR} at t={state.t}")
    if not (np.all(np.isfinite(state.rho)) and np.all(np.isfinite(state.u))
            and np.all(np.isfinite(state.nu))):
        raise SimulationError(f"non-finite field values at t={state.t}")


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------


def rhs_fluid(state: FieldState, closure: ClosureFamily, grid: Grid):
    """(drho/dt, du/dt, dnu/dt) for the closed fluid system.

      drho/dt = -d_x(rho u)
      du/dt   = -d_x(dH/drho) + (1/rho) sum_k (dH/dnu_k) d_x nu_k
      dnu_k/dt = -u d_x nu_k - (1/rho) d_x( g_kl (dH/dnu_l) / rho )

    with dH/drho = u^2/2 + (3/2) rho^2 (mu_2 - mu_1^2) + phi and
    dH/dnu_l = (1/2) rho^3 (dmu_2/dnu_l - 2 mu_1 dmu_1/dnu_l).
    """
    _check_state(state)
    tab = _ClosureTables.of(closure)
    rho, u, nu = state.rho, state.u, state.nu
    nuv = list(nu)
    mu1 = tab.mu1(nuv)
    mu2 = tab.mu2(nuv)
    phi = electric_potential(rho, state.n0, grid)
    dH_drho = 0.5 * u ** 2 + 1.5 * rho ** 2 * (mu2 - mu1 ** 2) + phi
    drho = -grid.deriv(rho * u)
    du = -grid.deriv(dH_drho)
    dnu = np.zeros_like(nu)
    if tab.nv:
        dH_dnu = np.array([0.5 * rho ** 3 * (tab.dmu2[l](nuv)
                                             - 2.0 * mu1 * tab.dmu1[l](nuv))
                           for l in range(tab.nv)])
        dxnu = grid.deriv(nu)
        du = du + np.sum(dH_dnu * dxnu, axis=0) / rho
        for k in range(tab.nv):
            flux = np.einsum("l,lx->x", tab.g[k], dH_dnu) / rho
            dnu[k] = -u * dxnu[k] - grid.deriv(flux) / rho
    return drho, du, dnu


def rhs_streams(state: StreamState, grid: Grid):
    """(da/dt, dv/dt) for M cold streams sharing the electric field:
    da_k/dt = -d_x(a_k v_k), dv_k/dt = -v_k d_x v_k + E."""
    rho = np.sum(state.a, axis=0)
    E = poisson_solve(rho, state.n0, grid)
    da = -grid.deriv(state.a * state.v)
    dv = -state.v * grid.deriv(state.v) + E
    return da, dv


def check_wave_breaking(state: StreamState, grid: Grid):
    """Raise once any stream velocity steepens beyond the breaking slope."""
    slope = grid.deriv(state.v)
    worst = float(np.min(slope))
    if worst < WAVE_BREAK_SLOPE:
        raise WaveBreakError(f"wave breaking: min d_x v = {worst:.3g} at t={state.t}")


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def hamiltonian(state: FieldState, closure: ClosureFamily, grid: Grid) -> float:
    """H = (1/2) integral [rho u^2 + rho^3 (mu_2 - mu_1^2) + E^2] dx."""
    tab = _ClosureTables.of(closure)
    nuv = list(state.nu)
    mu1 = tab.mu1(nuv)
    mu2 = tab.mu2(nuv)
    E = poisson_solve(state.rho, state.n0, grid)
    dens = state.rho * state.u ** 2 + state.rho ** 3 * (mu2 - mu1 ** 2) + E ** 2
    return 0.5 * grid.integral(dens)


def diagnostics(state: FieldState, closure: ClosureFamily, grid: Grid) -> DiagnosticRecord:
    tab = _ClosureTables.of(closure)
    nuv = list(state.nu)
    mu1 = tab.mu1(nuv)
    E = poisson_solve(state.rho, state.n0, grid)
    psi = state.u - state.rho * mu1
    return DiagnosticRecord(
        t=state.t,
        H=hamiltonian(state, closure, grid),
        C_mass=grid.integral(state.rho),
        C_psi=grid.integral(psi),
        C_nu=tuple(grid.integral(state.rho * state.nu[k]) for k in range(tab.nv)),
        momentum=grid.integral(state.rho * state.u),
        field_energy=0.5 * grid.integral(E ** 2),
    )


def stream_diagnostics(state: StreamState, grid: Grid):
    """(H, mass, momentum) of the multi-stream model."""
    rho = np.sum(state.a, axis=0)
    E = poisson_solve(rho, state.n0, grid)
    H = 0.5 * grid.integral(np.sum(state.a * state.v ** 2, axis=0) + E ** 2)
    return H, grid.integral(rho), grid.integral(np.sum(state.a * state.v, axis=0))


def cfl_dt(state: FieldState, closure: ClosureFamily, grid: Grid,
           safety: float = 0.4) -> float:
    """Time-step bound 0.4 dx / max|u +- c| with the thermal-speed estimate
    c^2 = 3 rho^2 (mu_2 - mu_1^2), capped by the plasma period."""
    tab = _ClosureTables.of(closure)
    nuv = list(state.nu)
    s2 = tab.mu2(nuv) - tab.mu1(nuv) ** 2
    c = np.sqrt(np.maximum(3.0 * state.rho ** 2 * s2, 0.0))
    vmax = float(np.max(np.abs(state.u) + c))
    dt_adv = safety * grid.dx / vmax if vmax > 0 else np.inf
    wp = np.sqrt(max(state.n0, RHO_FLOOR))
    return min(dt_adv, safety / wp)


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------


def _rk4(y: list[np.ndarray], rhs, dt: float) -> list[np.ndarray]:
    k1 = rhs(y)
    k2 = rhs([yi + 0.5 * dt * ki for yi, ki in zip(y, k1)])
    k3 = rhs([yi + 0.5 * dt * ki for yi, ki in zip(y, k2)])
    k4 = rhs([yi + dt * ki for yi, ki in zip(y, k3)])
    return [yi + (dt / 6.0) * (a + 2 * b + 2 * c + d)
            for yi, a, b, c, d in zip(y, k1, k2, k3, k4)]


def step_rk4(state: FieldState, closure: ClosureFamily, grid: Grid,
             dt: float) -> FieldState:
    def rhs(y):
        s = FieldState(y[0], y[1], np.array(y[2:]).reshape(state.nu.shape),
                       state.n0, state.t)
        dr, du, dn = rhs_fluid(s, closure, grid)
        return [dr, du, *dn]

    out = _rk4([state.rho, state.u, *state.nu], rhs, dt)
    new = FieldState(out[0], out[1],
                     np.array(out[2:]).reshape(state.nu.shape),
                     state.n0, state.t + dt)
    _check_state(new)
    return new


def step_streams(state: StreamState, grid: Grid, dt: float) -> StreamState:
    def rhs(y):
        s = StreamState(y[0], y[1], state.n0, state.t)
        return list(rhs_streams(s, grid))

    a, v = _rk4([state.a, state.v], rhs, dt)
    new = StreamState(a, v, state.n0, state.t + dt)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(v))):
        raise SimulationError(f"non-finite stream values at t={new.t}")
    return new


def _split_pack(state: FieldState, tab: _ClosureTables):
    """(rho, u, nu) -> flat extensive variables (rho, psi, mtil)."""
    mu1 = tab.mu1(list(state.nu))
    psi = state.u - state.rho * mu1
    m = state.rho * state.nu                       # (nv, nx)
    mtil = tab.T.T @ m if tab.nv else m
    return state.rho.copy(), psi, mtil


def _split_unpack(rho, psi, mtil, tab: _ClosureTables, n0, t) -> FieldState:
    m = tab.Tinv.T @ mtil if tab.nv else mtil
    nu = m / rho
    u = psi + rho * tab.mu1(list(nu))
    return FieldState(rho, u, nu, n0, t)


def _split_derivs(rho, psi, mtil, tab: _ClosureTables, n0, grid: Grid):
    """Functional derivatives of H in the flat variables.

      dH/dpsi = rho u
      dH/dm_k = rho u dmu1/dnu_k + (rho^2/2)(dmu2/dnu_k - 2 mu1 dmu1/dnu_k)
      dH/drho|psi,m = u^2/2 - rho u mu1 + (rho^2/2)(gamma_2 + mu_1^2) + phi
    """
    nv = tab.nv
    m = tab.Tinv.T @ mtil if nv else mtil
    nu = m / rho
    nuv = list(nu)
    mu1 = tab.mu1(nuv)
    u = psi + rho * mu1
    phi = electric_potential(rho, n0, grid)
    dH_psi = rho * u
    dH_rho = (0.5 * u ** 2 - rho * u * mu1
              + 0.5 * rho ** 2 * (tab.gamma2(nuv) + mu1 ** 2) + phi)
    if nv:
        dH_m = np.array([rho * u * tab.dmu1[k](nuv)
                         + 0.5 * rho ** 2 * (tab.dmu2[k](nuv)
                                             - 2.0 * mu1 * tab.dmu1[k](nuv))
                         for k in range(nv)])
        dH_mtil = tab.Tinv @ dH_m
    else:
        dH_mtil = mtil
    return dH_rho, dH_psi, dH_mtil


def step_split(state: FieldState, closure: ClosureFamily, grid: Grid,
               dt: float) -> FieldState:
    """Strang splitting in the flat variables.

    Sub-flows (each one rk4 step on its partial right-hand side):
      B  (macro): drho/dt = -d_x(dH/dpsi), dpsi/dt = -d_x(dH/drho)
      A_a (one per diagonal metric entry): dmtil_a/dt = -D_a d_x(dH/dmtil_a)
    ordered A_1..A_nv (dt/2), B (dt), A_nv..A_1 (dt/2).  Every sub-flow is
    in flux form, so each integral(mtil_a), integral(rho), integral(psi)
    telescopes to round-off.
    """
    tab = _ClosureTables.of(closure)
    rho, psi, mtil = _split_pack(state, tab)

    def flow_micro(a: int, h: float):
        nonlocal mtil

        def rhs(y):
            mt = mtil.copy()
            mt[a] = y[0]
            _, _, dH_mtil = _split_derivs(rho, psi, mt, tab, state.n0, grid)
            return [-tab.D[a] * grid.deriv(dH_mtil[a])]

        mtil[a] = _rk4([mtil[a]], rhs, h)[0]

    def flow_macro(h: float):
        nonlocal rho, psi

        def rhs(y):
            dH_rho, dH_psi, _ = _split_derivs(y[0], y[1], mtil, tab,
                                              state.n0, grid)
            return [-grid.deriv(dH_psi), -grid.deriv(dH_rho)]

        rho, psi = _rk4([rho, psi], rhs, h)

    for a in range(tab.nv):
        flow_micro(a, 0.5 * dt)
    flow_macro(dt)
    for a in range(tab.nv - 1, -1, -1):
        flow_micro(a, 0.5 * dt)

    new = _split_unpack(rho, psi, mtil, tab, state.n0, state.t + dt)
    _check_state(new)
    return new


def step(state: FieldState, closure: ClosureFamily, grid: Grid, dt: float,
         scheme: str = "rk4") -> FieldState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    bound = cfl_dt(state, closure, grid)
    if dt > bound:
        warnings.warn(f"dt={dt} exceeds CFL estimate {bound:.3g}", stacklevel=2)
    if scheme == "rk4":
        return step_rk4(state, closure, grid, dt)
    if scheme == "split":
        return step_split(state, closure, grid, dt)
    raise ValueError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------


def single_mode_state(grid: Grid, closure: ClosureFamily, n0: float = 1.0,
                      eps: float = 1e-3, u0: float = 0.0,
                      nu_base=(), nu_eps=()) -> FieldState:
    """Homogeneous background with one cosine mode on rho (and optionally
    on the normal variables); the rho perturbation keeps exact neutrality."""
    x = grid.x
    c = np.cos(2.0 * np.pi * x / grid.L)
    rho = n0 * (1.0 + eps * c)
    u = np.full(grid.nx, float(u0))
    nv = closure.nu_count
    nu_base = list(nu_base) or [0.0] * nv
    nu_eps = list(nu_eps) or [0.0] * nv
    nu = np.array([nu_base[k] + nu_eps[k] * c for k in range(nv)]) \
        if nv else np.zeros((0, grid.nx))
    return FieldState(rho, u, nu, n0)


def two_stream_state(grid: Grid, n0: float = 1.0, v0: float = 0.5,
                     eps: float = 1e-3) -> StreamState:
    """Two symmetric counter-propagating streams with a small density mode."""
    c = np.cos(2.0 * np.pi * grid.x / grid.L)
    a = np.array([0.5 * n0 * (1.0 + eps * c), 0.5 * n0 * (1.0 - eps * c)])
    v = np.array([np.full(grid.nx, v0), np.full(grid.nx, -v0)])
    return StreamState(a, v, n0)


# ---------------------------------------------------------------------------
# Run driver
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    records: list[DiagnosticRecord]
    final: FieldState
    closure: ClosureFamily
    grid: Grid


def run_fluid(state: FieldState, closure: ClosureFamily, grid: Grid,
              dt: float, t_end: float, scheme: str = "rk4",
              stride: int = 1, on_record=None) -> RunResult:
    """Advance to t_end recording diagnostics every `stride` steps."""
    records = [diagnostics(state, closure, grid)]
    nsteps = int(round(t_end / dt))
    for i in range(nsteps):
        state = step(state, closure, grid, dt, scheme=scheme)
        if (i + 1) % stride == 0 or i == nsteps - 1:
            rec = diagnostics(state, closure, grid)
            records.append(rec)
            if on_record is not None:
                on_record(state, rec)
    return RunResult(records, state, closure, grid)


def write_diagnostics_csv(path, records: list[DiagnosticRecord], n_nu: int):
    header = ["t", "H", "C_mass", "C_psi",
              *[f"C_{k}" for k in range(1, n_nu + 1)], "momentum", "field_energy"]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for rec in records:
            w.writerow([f"{v:.17g}" for v in rec.row()])


def write_snapshot(path, state: FieldState, nx: int, N: int):
    np.savez(path, format_version=1, nx=nx, N=N, t=state.t,
             rho=state.rho, u=state.u, nu=state.nu, n0=state.n0)
