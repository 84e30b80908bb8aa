"""Paired viscous/inviscid channel solvers in vorticity-streamfunction form.

Both schemes share a Fourier-in-x1 / second-order finite-difference-in-x2
discretization on the channel [0, Lx) x [0, Ly]:

* viscous ("ns"): no-slip wall at x2 = 0, stress-free top (omega = 0);
  2nd-order IMEX stepping, Adams-Bashforth for advection and
  Crank-Nicolson for diffusion, with the wall vorticity of each nonzero
  mode closed by an influence-matrix condition that enforces the discrete
  no-slip constraint exactly.
* inviscid ("euler"): impermeable wall and top, tangential slip;
  Adams-Bashforth transport of vorticity.

Velocity is reconstructed from vorticity through banded streamfunction
solves mode by mode, so the discrete divergence vanishes by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.fft import dst
from scipy.linalg import solve_banded

from .grid import (
    Grid,
    ScalarField,
    VectorField,
    _d1_stencils,
    _d2_interior,
    curl2d,
    make_channel_grid,
)

__all__ = [
    "CFLError",
    "FlowState",
    "Trajectory",
    "PairedRun",
    "SimulationConfig",
    "NavierStokesIntegrator",
    "EulerIntegrator",
    "ns_step",
    "euler_step",
    "kinetic_energy",
    "ShearFlow",
    "shear_exact",
    "run_simulation",
]

CFL_SAFETY = 0.4


class CFLError(RuntimeError):
    """Raised when the fixed step exceeds the advective CFL limit."""


@dataclass(frozen=True)
class FlowState:
    """One velocity/vorticity snapshot; wall conditions hold exactly."""

    grid: Grid
    t: float
    nu: float
    velocity: VectorField
    vorticity: ScalarField

    def __post_init__(self):
        v = self.velocity
        if v.grid is not self.grid or self.vorticity.grid is not self.grid:
            raise ValueError("state fields must live on the state grid")
        if np.any(v.comp2[:, 0] != 0.0) or np.any(v.comp2[:, -1] != 0.0):
            raise ValueError("wall-normal velocity must vanish exactly at walls")
        if self.nu > 0.0 and np.any(v.comp1[:, 0] != 0.0):
            raise ValueError("no-slip wall requires comp1 = 0 at x2 = 0")


@dataclass(frozen=True)
class Trajectory:
    grid: Grid
    scheme: str
    nu: float
    dt: float
    states: tuple
    step_energies: tuple | None = None

    def __post_init__(self):
        if not self.states:
            raise ValueError("trajectory needs at least one state")
        ts = [s.t for s in self.states]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("state times must increase strictly")
        for s in self.states:
            if s.grid is not self.grid:
                raise ValueError("all states must share the trajectory grid")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


@dataclass(frozen=True)
class PairedRun:
    """Viscous and inviscid runs from identical initial data."""

    ns: Trajectory
    euler: Trajectory


def kinetic_energy(vel: VectorField) -> float:
    w = vel.grid.quad_weights
    return 0.5 * float(np.sum(w * (vel.comp1**2 + vel.comp2**2)))


class _ChannelOperators:
    """Grid-bound spectral/banded machinery shared by both schemes."""

    def __init__(self, grid: Grid):
        self.grid = grid
        nx, ny = grid.nx, grid.ny
        self.nk = nx // 2 + 1
        k = grid.wavenumbers()
        self.k = k
        self.ik = 1j * k.copy()
        self.ik[-1] = 0.0  # drop the Nyquist mode in derivatives
        self.dealias = np.arange(self.nk) <= nx // 3
        lo, di, up, bottom, top = _d1_stencils(grid.y)
        self.d1 = (lo, di, up)
        self.d1_bottom = bottom
        self.d1_top = top
        self.d2 = _d2_interior(grid.y)
        self.dy = np.diff(grid.y)
        # Banded (1,1) streamfunction operators (d2/dy2 - k^2), Dirichlet rows.
        d2lo, d2di, d2up = self.d2
        self.poisson = np.zeros((self.nk, 3, ny))
        for m in range(self.nk):
            ab = self.poisson[m]
            ab[1, 0] = 1.0
            ab[1, -1] = 1.0
            ab[2, 0:-2] = d2lo
            ab[1, 1:-1] = d2di - k[m] ** 2
            ab[0, 2:] = d2up

    def apply_d1(self, vals):
        lo, di, up = self.d1
        out = np.empty_like(vals)
        out[:, 1:-1] = lo * vals[:, :-2] + di * vals[:, 1:-1] + up * vals[:, 2:]
        b, t = self.d1_bottom, self.d1_top
        out[:, 0] = b[0] * vals[:, 0] + b[1] * vals[:, 1] + b[2] * vals[:, 2]
        out[:, -1] = t[0] * vals[:, -1] + t[1] * vals[:, -2] + t[2] * vals[:, -3]
        return out

    def apply_d2_interior(self, vals):
        lo, di, up = self.d2
        out = np.zeros_like(vals)
        out[:, 1:-1] = lo * vals[:, :-2] + di * vals[:, 1:-1] + up * vals[:, 2:]
        return out

    def wall_d1(self, vals_row3):
        b = self.d1_bottom
        return b[0] * vals_row3[0] + b[1] * vals_row3[1] + b[2] * vals_row3[2]

    def solve_poisson(self, omega_hat):
        """(d2/dy2 - k^2) psi_hat = -omega_hat, psi_hat = 0 at wall and top."""
        psi = np.zeros_like(omega_hat)
        for m in range(1, self.nk):
            rhs = -omega_hat[m].copy()
            rhs[0] = 0.0
            rhs[-1] = 0.0
            psi[m] = solve_banded((1, 1), self.poisson[m], rhs)
        return psi

    def cumtrapz_y(self, row):
        out = np.empty_like(row)
        out[0] = 0.0
        np.cumsum(0.5 * (row[1:] + row[:-1]) * self.dy, out=out[1:])
        return out

    def mean_mode_u1(self, omega_hat0, wall_mean):
        """Mean tangential profile from the mean vorticity row."""
        mean_omega = omega_hat0.real / self.grid.nx
        return wall_mean - self.cumtrapz_y(mean_omega)

    def velocity_from_omega_hat(self, omega_hat, wall_mean, slip, psi_hat=None):
        nx = self.grid.nx
        if psi_hat is None:
            psi_hat = self.solve_poisson(omega_hat)
        u1_hat = self.apply_d1(psi_hat)
        u2_hat = -self.ik[:, None] * psi_hat
        u1_hat[0, :] = nx * self.mean_mode_u1(omega_hat[0], wall_mean)
        u2_hat[0, :] = 0.0
        u1 = np.fft.irfft(u1_hat, n=nx, axis=0)
        u2 = np.fft.irfft(u2_hat, n=nx, axis=0)
        if not slip:
            u1[:, 0] = 0.0
        u2[:, 0] = 0.0
        u2[:, -1] = 0.0
        return u1, u2

    def advection(self, u1, u2, omega):
        """Dealiased transport term u . grad(omega), in physical space."""
        omega_hat = np.fft.rfft(omega, axis=0)
        om_x = np.fft.irfft(self.ik[:, None] * omega_hat, n=self.grid.nx, axis=0)
        om_y = self.apply_d1(omega)
        n_hat = np.fft.rfft(u1 * om_x + u2 * om_y, axis=0)
        n_hat[~self.dealias] = 0.0
        return np.fft.irfft(n_hat, n=self.grid.nx, axis=0)

    def check_cfl(self, u1, u2, dt):
        vmax1 = float(np.max(np.abs(u1)))
        vmax2 = float(np.max(np.abs(u2)))
        limit = CFL_SAFETY * min(
            self.grid.dx / vmax1 if vmax1 > 0.0 else np.inf,
            self.grid.dy_min / vmax2 if vmax2 > 0.0 else np.inf,
        )
        if dt > limit:
            raise CFLError(
                f"dt = {dt!r} exceeds advective limit {limit!r} "
                f"(|u1| = {vmax1:.3g}, |u2| = {vmax2:.3g})"
            )


class _ImplicitDiffusion:
    """Crank-Nicolson operators for one (nu, dt) pair, with the wall
    closure of each nonzero mode precomputed (influence responses)."""

    def __init__(self, ops: _ChannelOperators, nu: float, dt: float):
        self.ops = ops
        self.nu = nu
        self.dt = dt
        ny = ops.grid.ny
        c = 0.5 * nu * dt
        d2lo, d2di, d2up = ops.d2
        k = ops.k
        self.mats = np.zeros((ops.nk, 4, ny))
        for m in range(ops.nk):
            ab = self.mats[m]
            # interior rows: I - c (d2/dy2 - k^2)
            ab[3, 0:-2] = -c * d2lo
            ab[2, 1:-1] = 1.0 - c * d2di + c * k[m] ** 2
            ab[1, 2:] = -c * d2up
            ab[2, -1] = 1.0  # top: omega = 0
            if m == 0:
                b = ops.d1_bottom  # wall: d(omega)/dy = 0 for the mean mode
                ab[2, 0] = b[0]
                ab[1, 1] = b[1]
                ab[0, 2] = b[2]
            else:
                ab[2, 0] = 1.0  # wall: Dirichlet placeholder for the closure
        # Influence responses: wall-unit vorticity per mode and its
        # streamfunction wall-flux.
        self.omega_h = np.zeros((ops.nk, ny))
        self.psi_h = np.zeros((ops.nk, ny))
        self.slope_h = np.zeros(ops.nk)
        e0 = np.zeros(ny)
        e0[0] = 1.0
        for m in range(1, ops.nk):
            w = solve_banded((1, 2), self.mats[m], e0)
            rhs = -w.copy()
            rhs[0] = 0.0
            rhs[-1] = 0.0
            p = solve_banded((1, 1), ops.poisson[m], rhs)
            self.omega_h[m] = w
            self.psi_h[m] = p
            self.slope_h[m] = ops.wall_d1(p[:3])

    def advance(self, omega_hat, adv_hat):
        """One CN step: returns (omega_hat_new, psi_hat_new)."""
        ops = self.ops
        c = 0.5 * self.nu * self.dt
        d2 = ops.apply_d2_interior(omega_hat)
        rhs = (
            omega_hat
            - self.dt * adv_hat
            + c * (d2 - (ops.k**2)[:, None] * omega_hat)
        )
        rhs[:, 0] = 0.0
        rhs[:, -1] = 0.0
        out = np.empty_like(omega_hat)
        psi = np.zeros_like(omega_hat)
        out[0] = solve_banded((1, 2), self.mats[0], rhs[0])
        for m in range(1, ops.nk):
            wp = solve_banded((1, 2), self.mats[m], rhs[m])
            prhs = -wp.copy()
            prhs[0] = 0.0
            prhs[-1] = 0.0
            pp = solve_banded((1, 1), ops.poisson[m], prhs)
            coef = -ops.wall_d1(pp[:3]) / self.slope_h[m]
            out[m] = wp + coef * self.omega_h[m]
            psi[m] = pp + coef * self.psi_h[m]
        return out, psi


def _state(grid, t, nu, u1, u2, omega) -> FlowState:
    return FlowState(
        grid=grid,
        t=float(t),
        nu=float(nu),
        velocity=VectorField(grid, u1, u2),
        vorticity=ScalarField(grid, omega),
    )


def _check_finite(omega, t):
    if not np.all(np.isfinite(omega)):
        raise RuntimeError(f"solution lost finiteness near t = {t!r}")


class NavierStokesIntegrator:
    """No-slip channel scheme at fixed (grid, nu, dt)."""

    def __init__(self, grid: Grid, nu: float, dt: float):
        if nu <= 0.0:
            raise ValueError("nu must be positive")
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.nu = nu
        self.dt = dt
        self.ops = _ChannelOperators(grid)
        self.full = _ImplicitDiffusion(self.ops, nu, dt)
        self.half = _ImplicitDiffusion(self.ops, nu, 0.5 * dt)

    def run(self, u0: VectorField, t_final: float, n_outputs: int,
            track_energy: bool = False) -> Trajectory:
        grid, ops, dt = self.grid, self.ops, self.dt
        n_steps = int(round(t_final / dt))
        if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
            raise ValueError("t_final must be an integer number of steps")
        if n_outputs < 1 or n_steps % n_outputs != 0:
            raise ValueError("n_outputs must divide the step count")
        every = n_steps // n_outputs

        # Project the initial data through the same omega -> psi -> velocity
        # reconstruction used for every later output, so all states (and the
        # per-step energies) live in one discrete representation.
        omega = curl2d(u0).values.copy()
        u1, u2 = ops.velocity_from_omega_hat(
            np.fft.rfft(omega, axis=0), 0.0, slip=False
        )
        states = [_state(grid, 0.0, self.nu, u1, u2, omega)]
        energies = (
            [0.5 * float(np.sum(grid.quad_weights * (u1**2 + u2**2)))]
            if track_energy
            else None
        )
        n_prev = None
        for n in range(1, n_steps + 1):
            ops.check_cfl(u1, u2, dt)
            n_cur = ops.advection(u1, u2, omega)
            omega_hat = np.fft.rfft(omega, axis=0)
            if n_prev is None:
                # bootstrap: CN midpoint (half step, re-evaluate, full step)
                oh_half, psi_half = self.half.advance(
                    omega_hat, np.fft.rfft(n_cur, axis=0)
                )
                om_half = np.fft.irfft(oh_half, n=grid.nx, axis=0)
                u1h, u2h = ops.velocity_from_omega_hat(
                    oh_half, 0.0, slip=False, psi_hat=psi_half
                )
                n_mid = ops.advection(u1h, u2h, om_half)
                omega_hat, psi_hat = self.full.advance(
                    np.fft.rfft(omega, axis=0), np.fft.rfft(n_mid, axis=0)
                )
            else:
                adv = 1.5 * n_cur - 0.5 * n_prev
                omega_hat, psi_hat = self.full.advance(
                    omega_hat, np.fft.rfft(adv, axis=0)
                )
            n_prev = n_cur
            omega = np.fft.irfft(omega_hat, n=grid.nx, axis=0)
            _check_finite(omega, n * dt)
            u1, u2 = ops.velocity_from_omega_hat(
                omega_hat, 0.0, slip=False, psi_hat=psi_hat
            )
            if track_energy:
                energies.append(
                    0.5 * float(np.sum(grid.quad_weights * (u1**2 + u2**2)))
                )
            if n % every == 0:
                states.append(_state(grid, n * dt, self.nu, u1, u2, omega))
        return Trajectory(
            grid=grid,
            scheme="ns",
            nu=self.nu,
            dt=dt,
            states=tuple(states),
            step_energies=tuple(energies) if track_energy else None,
        )


class EulerIntegrator:
    """Slip-wall transport scheme at fixed (grid, dt)."""

    def __init__(self, grid: Grid, dt: float):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.dt = dt
        self.ops = _ChannelOperators(grid)

    def _reconstruct(self, omega, wall_mean):
        omega_hat = np.fft.rfft(omega, axis=0)
        return self.ops.velocity_from_omega_hat(omega_hat, wall_mean, slip=True)

    def run(self, u0: VectorField, t_final: float, n_outputs: int,
            track_energy: bool = False) -> Trajectory:
        grid, ops, dt = self.grid, self.ops, self.dt
        n_steps = int(round(t_final / dt))
        if abs(n_steps * dt - t_final) > 1e-9 * max(1.0, t_final):
            raise ValueError("t_final must be an integer number of steps")
        if n_outputs < 1 or n_steps % n_outputs != 0:
            raise ValueError("n_outputs must divide the step count")
        every = n_steps // n_outputs

        # The x1-averaged tangential wall velocity is conserved by the
        # inviscid dynamics; it anchors the mean-mode reconstruction.
        wall_mean = float(np.mean(u0.comp1[:, 0]))
        omega = curl2d(u0).values.copy()
        u1, u2 = self._reconstruct(omega, wall_mean)
        states = [_state(grid, 0.0, 0.0, u1, u2, omega)]
        energies = (
            [0.5 * float(np.sum(grid.quad_weights * (u1**2 + u2**2)))]
            if track_energy
            else None
        )
        n_prev = None
        for n in range(1, n_steps + 1):
            ops.check_cfl(u1, u2, dt)
            n_cur = ops.advection(u1, u2, omega)
            if n_prev is None:
                om_half = omega - 0.5 * dt * n_cur
                u1h, u2h = self._reconstruct(om_half, wall_mean)
                n_mid = ops.advection(u1h, u2h, om_half)
                omega = omega - dt * n_mid
            else:
                omega = omega - dt * (1.5 * n_cur - 0.5 * n_prev)
            n_prev = n_cur
            _check_finite(omega, n * dt)
            u1, u2 = self._reconstruct(omega, wall_mean)
            if track_energy:
                energies.append(
                    0.5 * float(np.sum(grid.quad_weights * (u1**2 + u2**2)))
                )
            if n % every == 0:
                states.append(_state(grid, n * dt, 0.0, u1, u2, omega))
        return Trajectory(
            grid=grid,
            scheme="euler",
            nu=0.0,
            dt=dt,
            states=tuple(states),
            step_energies=tuple(energies) if track_energy else None,
        )


def ns_step(state: FlowState, dt: float) -> FlowState:
    """Advance one viscous step (single-step bootstrap scheme)."""
    integ = NavierStokesIntegrator(state.grid, state.nu, dt)
    traj = integ.run(state.velocity, dt, 1)
    out = traj.states[-1]
    return replace(out, t=state.t + dt)


def euler_step(state: FlowState, dt: float) -> FlowState:
    """Advance one inviscid step (single-step bootstrap scheme)."""
    integ = EulerIntegrator(state.grid, dt)
    traj = integ.run(state.velocity, dt, 1)
    out = traj.states[-1]
    return replace(out, t=state.t + dt)


# ---------------------------------------------------------------------------
# Exact shear solution


class ShearFlow:
    """Parallel shear flow (w(x2, t), 0) by mixed sine eigenseries.

    The profile solves the heat equation with w = 0 at the wall and
    dw/dx2 = 0 at the top, matching the channel scheme's wall/top
    conditions; eigenmodes are sin(lam_m x2), lam_m = (m + 1/2) pi / Ly.
    Coefficients of an arbitrary profile come from a type-4 discrete sine
    transform of midpoint samples (exact for band-limited profiles,
    aliasing-level error otherwise).
    """

    def __init__(self, v0=None, height=1.0, n_modes=4096, coeffs=None):
        self.height = float(height)
        if coeffs is not None:
            b = np.asarray(coeffs, dtype=float)
        else:
            if v0 is None:
                raise ValueError("provide a profile callable or coefficients")
            n = int(n_modes)
            y_mid = (np.arange(n) + 0.5) * (self.height / n)
            b = dst(np.asarray(v0(y_mid), dtype=float), type=4) / n
        self.coeffs = b
        self.lam = (np.arange(b.size) + 0.5) * np.pi / self.height

    @classmethod
    def from_modes(cls, height, amplitudes: dict):
        """Exact finite series: {mode index m: amplitude}."""
        n = max(amplitudes) + 1
        b = np.zeros(n)
        for m, a in amplitudes.items():
            b[m] = a
        return cls(height=height, coeffs=b)

    def _decay(self, nu, t):
        return self.coeffs * np.exp(-nu * self.lam**2 * t)

    def profile(self, y, nu, t):
        return np.sin(np.outer(np.asarray(y, dtype=float), self.lam)) @ self._decay(nu, t)

    def dprofile(self, y, nu, t):
        return np.cos(np.outer(np.asarray(y, dtype=float), self.lam)) @ (
            self.lam * self._decay(nu, t)
        )

    def wall_vorticity(self, nu, t) -> float:
        """omega(x2 = 0, t) = -dw/dx2(0, t)."""
        return -float(np.sum(self.lam * self._decay(nu, t)))

    def l2_error_sq(self, nu, t) -> float:
        """||w(., t) - w(., 0)||^2 on (0, Ly), per unit x1 length (exact
        in the truncated series by eigenmode orthogonality)."""
        gap = self.coeffs * (1.0 - np.exp(-nu * self.lam**2 * t))
        return 0.5 * self.height * float(np.sum(gap**2))


def shear_exact(v0, nu: float, t: float, grid_y, n_modes: int = 4096) -> np.ndarray:
    """Exact shear profile w(grid_y, t) from initial profile v0 (v0(0) = 0)."""
    y = np.asarray(grid_y, dtype=float)
    if abs(float(np.asarray(v0(np.zeros(1))).ravel()[0])) > 1e-13:
        raise ValueError("shear profile must vanish at the wall")
    flow = ShearFlow(v0=v0, height=float(y[-1]), n_modes=n_modes)
    return flow.profile(y, nu, t)


# ---------------------------------------------------------------------------
# Paired runs


@dataclass
class SimulationConfig:
    """One paired (viscous, inviscid) run specification."""

    nx: int = 128
    ny: int = 193
    period: float = 2.0 * np.pi
    height: float = 6.0
    clustering: str = "tanh"
    strength: float = 2.0
    nu: float = 1e-3
    dt: float = 2e-3
    t_final: float = 0.5
    n_outputs: int = 10
    preset: str = "shear"
    amplitude: float = 1.0
    seed: int = 0
    preset_options: dict = field(default_factory=dict)

    def validate(self):
        if self.nu <= 0.0:
            raise ValueError("nu must be positive")
        if self.dt <= 0.0 or self.t_final <= 0.0:
            raise ValueError("dt and t_final must be positive")
        n_steps = int(round(self.t_final / self.dt))
        if n_steps < 1 or abs(n_steps * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            raise ValueError("t_final must be an integer multiple of dt")
        if self.n_outputs < 1 or n_steps % self.n_outputs != 0:
            raise ValueError("n_outputs must divide t_final/dt")
        return self

    def make_grid(self) -> Grid:
        kwargs = {}
        if self.clustering == "tanh":
            kwargs["strength"] = self.strength
        return make_channel_grid(
            self.nx, self.ny, self.period, self.height,
            clustering=self.clustering, **kwargs,
        )


def run_simulation(config: SimulationConfig) -> PairedRun:
    """Run the viscous and inviscid schemes from identical initial data.

    The initial field must satisfy both wall conditions (no-slip and
    impermeability) so the two runs genuinely share it.
    """
    from .initial_data import build_initial_data

    config.validate()
    grid = config.make_grid()
    u0 = build_initial_data(
        config.preset, grid, amplitude=config.amplitude, seed=config.seed,
        **config.preset_options,
    )
    if np.any(u0.comp1[:, 0] != 0.0):
        raise ValueError("initial data must satisfy no-slip at the wall")
    if np.any(u0.comp2[:, 0] != 0.0) or np.any(u0.comp2[:, -1] != 0.0):
        raise ValueError("initial data must be impermeable at wall and top")
    ns = NavierStokesIntegrator(grid, config.nu, config.dt).run(
        u0, config.t_final, config.n_outputs
    )
    euler = EulerIntegrator(grid, config.dt).run(u0, config.t_final, config.n_outputs)
    return PairedRun(ns=ns, euler=euler)
