"""Weak-drive, two-excitation-truncated non-Hermitian time evolution of
finite arrays, and the numerical correlators built on it.

State layout: vacuum amplitude c0, one-excitation vector c1 (length N), and a
complex-symmetric zero-diagonal matrix c2 holding pair amplitudes (the state
carries (1/2) sum_nm c2_nm raise_n raise_m |0>, so the unordered pair {n,m}
has amplitude c2_nm and the sector norm is ||c2||_F^2 / 2).  The zero
diagonal encodes the two-level (hard-core) constraint structurally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .core_model import (
    EPS_CONE,
    K_A,
    DriveSpec,
    InvalidParameterError,
    LatticeGeometry,
    LightConeSingularityError,
)
from .collective import gamma_continuous
from .linear_finite import GaussianMode, coupling_matrix, drive_amplitudes


class StepTooLargeError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    pass


class ZeroIntensityError(ZeroDivisionError):
    pass


@dataclass
class TruncatedState:
    c0: complex
    c1: np.ndarray
    c2: np.ndarray

    @classmethod
    def vacuum(cls, n_atoms: int) -> "TruncatedState":
        return cls(1.0 + 0.0j, np.zeros(n_atoms, complex), np.zeros((n_atoms, n_atoms), complex))

    def copy(self) -> "TruncatedState":
        return TruncatedState(self.c0, self.c1.copy(), self.c2.copy())

    def norm2(self) -> float:
        return float(
            abs(self.c0) ** 2 + np.vdot(self.c1, self.c1).real + 0.5 * np.vdot(self.c2, self.c2).real
        )

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def scaled(self, s: complex) -> "TruncatedState":
        return TruncatedState(s * self.c0, s * self.c1, s * self.c2)

    def added(self, other: "TruncatedState", s: complex = 1.0) -> "TruncatedState":
        return TruncatedState(
            self.c0 + s * other.c0, self.c1 + s * other.c1, self.c2 + s * other.c2
        )

    def pair_amplitudes(self) -> np.ndarray:
        """Unordered-pair amplitudes in n<m lexicographic order."""
        iu = np.triu_indices(len(self.c1), k=1)
        return self.c2[iu]


class EffectiveHamiltonian:
    """Matrix-free action of the truncated non-Hermitian Hamiltonian:
    excitation hopping with complex symmetric couplings, a classical drive
    coupling neighbouring sectors, and the hard-core constraint enforced by
    keeping pair matrices zero on the diagonal."""

    def __init__(self, geom: LatticeGeometry, delta: float, omega: np.ndarray, k: float = K_A):
        self.geom = geom
        self.delta = delta
        self.omega = np.asarray(omega, dtype=complex)
        m = coupling_matrix(geom, delta, k)
        self.a = -m
        self.gamma = np.imag(m)  # decay matrix; diagonal is the single-atom rate 1
        self._norm_estimate: float | None = None

    def apply(self, psi: TruncatedState) -> TruncatedState:
        om = self.omega
        out0 = -np.vdot(om, psi.c1)
        out1 = self.a @ psi.c1 - psi.c0 * om - psi.c2 @ np.conj(om)
        ac = self.a @ psi.c2
        src = np.outer(om, psi.c1)
        out2 = ac + ac.T - src - src.T
        np.fill_diagonal(out2, 0.0)
        return TruncatedState(out0, out1, out2)

    def norm_estimate(self, seed: int = 0, iterations: int = 20) -> float:
        """Power-iteration estimate of the spectral norm of the action."""
        if self._norm_estimate is None:
            rng = np.random.default_rng(seed)
            n = len(self.omega)
            psi = TruncatedState(
                complex(rng.standard_normal()),
                rng.standard_normal(n) + 1j * rng.standard_normal(n),
                np.zeros((n, n), complex),
            )
            c2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            psi.c2 = c2 + c2.T
            np.fill_diagonal(psi.c2, 0.0)
            est = 1.0
            for _ in range(iterations):
                psi = self.apply(psi)
                est = psi.norm()
                if est == 0.0:
                    return 0.0
                psi = psi.scaled(1.0 / est)
            self._norm_estimate = est
        return self._norm_estimate

    def decay_expectation(self, psi: TruncatedState) -> float:
        """sum_nm gamma_nm <raise_n lower_m> on the truncated state."""
        one = np.vdot(psi.c1, self.gamma @ psi.c1).real
        two = np.einsum("nq,nm,mq->", np.conj(psi.c2), self.gamma, psi.c2).real
        return one + two


def step(psi: TruncatedState, h: EffectiveHamiltonian, dt: float) -> tuple[TruncatedState, float]:
    """One first-order step: psi' = (1 - i H dt) psi, renormalized by
    sqrt(1 - dp) with dp the accumulated decay probability of the step."""
    if dt * h.norm_estimate() >= 0.05:
        raise StepTooLargeError("dt too large for first-order stepping")
    dp = 2.0 * dt * h.decay_expectation(psi)
    out = psi.added(h.apply(psi), -1j * dt)
    return out.scaled(1.0 / math.sqrt(1.0 - dp)), dp


def _rk4_step(psi: TruncatedState, h: EffectiveHamiltonian, dt: float) -> TruncatedState:
    k1 = h.apply(psi).scaled(-1j)
    k2 = h.apply(psi.added(k1, dt / 2.0)).scaled(-1j)
    k3 = h.apply(psi.added(k2, dt / 2.0)).scaled(-1j)
    k4 = h.apply(psi.added(k3, dt)).scaled(-1j)
    out = psi.added(k1, dt / 6.0)
    out = out.added(k2, dt / 3.0)
    out = out.added(k3, dt / 3.0)
    return out.added(k4, dt / 6.0)


def evolve(
    psi: TruncatedState,
    h: EffectiveHamiltonian,
    t_grid,
    dt: float = 1e-2,
    method: str = "rk4",
):
    """Evolve psi (unnormalized, no jumps) and yield (t, state) at each grid
    time.  Because no jumps occur, dividing by the running norm at readout is
    exactly the per-step renormalization of the first-order scheme."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0) or t_grid[0] < 0:
        raise InvalidParameterError("t_grid must be strictly increasing and non-negative")
    if method not in ("rk4", "euler"):
        raise InvalidParameterError("method must be 'rk4' or 'euler'")
    t = 0.0
    psi = psi.copy()
    out = []
    for t_target in t_grid:
        while t < t_target - 1e-12:
            h_step = min(dt, t_target - t)
            if method == "rk4":
                psi = _rk4_step(psi, h, h_step)
            else:
                psi = psi.added(h.apply(psi), -1j * h_step)
            t += h_step
        out.append((t_target, psi.copy()))
    return out


def steady_state(
    geom: LatticeGeometry,
    drive: DriveSpec,
    delta: float | None = None,
    mode: str = "perturbative",
    k: float = K_A,
    dt: float = 1e-2,
    window: float = 5.0,
    rtol: float = 1e-8,
    t_max: float = 400.0,
) -> TruncatedState:
    """Weak-drive steady state of the truncated system with c0 = 1.

    perturbative: solve the zero-eigenvector condition sector by sector; the
    one-excitation block is the dense linear solve, the pair block is a
    Sylvester-type equation with diagonal counterterms enforcing the zero
    diagonal.  time-stepping: evolve vacuum until the one- and two-excitation
    sectors stop changing over a trailing window.
    """
    if drive.amplitude > 1e-2:
        raise InvalidParameterError("steady_state requires a weak drive (amplitude <= 1e-2)")
    if delta is None:
        delta = drive.delta
    omega = drive_amplitudes(geom, drive, k)
    h = EffectiveHamiltonian(geom, delta, omega, k)
    if mode == "perturbative":
        lam, v = np.linalg.eig(h.a)
        w = np.linalg.inv(v)
        c1 = np.linalg.solve(h.a, omega)  # the linear steady state -M^{-1} omega
        c2 = np.zeros((len(omega), len(omega)), dtype=complex)
        # refine to the exact zero-drift eigenvector: the weak drive shifts the
        # eigenvalue by ev = -conj(omega).c1 = O(amplitude^2) and feeds the
        # pair sector back into the one-excitation sector
        for _ in range(3):
            ev = -np.vdot(omega, c1)
            rhs = omega + c2 @ np.conj(omega)
            c1 = v @ ((w @ rhs) / (lam - ev))
            c2 = _pair_steady_state(lam, v, w, omega, c1, ev)
        return TruncatedState(1.0 + 0.0j, c1, c2)
    if mode != "time-stepping":
        raise InvalidParameterError("mode must be 'perturbative' or 'time-stepping'")
    psi = TruncatedState.vacuum(geom.n_atoms)
    t = 0.0
    last = None
    while t < t_max:
        for _ in range(int(round(window / dt))):
            psi = _rk4_step(psi, h, dt)
        t += window
        snap = psi.scaled(1.0 / psi.c0)
        if last is not None:
            num = np.linalg.norm(snap.c1 - last.c1) + np.linalg.norm(snap.c2 - last.c2)
            den = np.linalg.norm(snap.c1) + np.linalg.norm(snap.c2)
            if num < rtol * den:
                return snap
        last = snap
    raise NonConvergenceError("time-stepping steady state did not settle")


def _pair_steady_state(
    lam: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
    omega: np.ndarray,
    c1: np.ndarray,
    shift: complex = 0.0,
) -> np.ndarray:
    """Solve offdiag(a c2 + c2 a - shift*c2) = offdiag(omega c1^T + c1 omega^T)
    for a complex-symmetric c2 with zero diagonal, given a = V diag(lam) W.

    Diagonalizing turns the Sylvester equation into a pointwise division; the
    zero-diagonal constraint is restored by adding an unknown diagonal source
    D and solving the small linear system that makes diag(c2) vanish.
    """
    n = len(omega)
    denom = lam[:, None] + lam[None, :] - shift
    if np.min(np.abs(denom)) < 1e-12:
        raise NonConvergenceError("pair-sector spectrum is near-degenerate at zero")
    src = np.outer(omega, c1)
    s = src + src.T
    np.fill_diagonal(s, 0.0)
    y0 = (w @ s @ w.T) / denom
    c2_0 = v @ y0 @ v.T
    # response of diag(c2) to a unit source on diagonal site k
    kmat = np.empty((n, n), dtype=complex)
    for kk in range(n):
        t = np.outer(w[:, kk], w[:, kk]) / denom
        vt = v @ t
        kmat[:, kk] = np.einsum("pi,pi->p", vt, v)
    d = np.linalg.solve(kmat, -np.diag(c2_0).copy())
    c2 = c2_0 + v @ (((w * d[None, :]) @ w.T) / denom) @ v.T
    c2 = 0.5 * (c2 + c2.T)
    np.fill_diagonal(c2, 0.0)
    return c2


@dataclass(frozen=True)
class MomentumDetector:
    """Plane-wave detection at transverse momentum k_perp in the transmitted
    ('T', co-propagating +z) or reflected ('R', -z) channel."""

    k_perp: tuple[float, float]
    channel: str
    unsafe: bool = False

    def __post_init__(self) -> None:
        if self.channel not in ("T", "R"):
            raise InvalidParameterError("channel must be 'T' or 'R'")


@dataclass(frozen=True)
class ModeDetector:
    """Gaussian-mode detection; 'T' uses the co-propagating mode and includes
    the coherent drive term, 'R' the counter-propagating mode without it."""

    mode: GaussianMode
    channel: str

    def __post_init__(self) -> None:
        if self.channel not in ("T", "R"):
            raise InvalidParameterError("channel must be 'T' or 'R'")


def _detector_parts(detector, geom: LatticeGeometry, drive: DriveSpec, k: float):
    """(scalar drive term, per-atom lowering weights) of a detection field."""
    pos = geom.positions
    if isinstance(detector, MomentumDetector):
        kp = np.asarray(detector.k_perp, dtype=float)
        kp2 = float(kp @ kp)
        if kp2 >= (k - 1e-6) ** 2 and not detector.unsafe:
            raise LightConeSingularityError(
                "momentum detector too close to the light cone (pass unsafe=True to override)"
            )
        if abs(kp2 - k * k) < EPS_CONE:
            raise LightConeSingularityError("detector momentum on the light cone")
        kz = math.sqrt(max(k * k - kp2, 0.0))
        sign = +1.0 if detector.channel == "T" else -1.0
        phases = np.exp(-1j * (pos[:, 0] * kp[0] + pos[:, 1] * kp[1] + sign * kz * pos[:, 2]))
        rate = gamma_continuous(kp, 0.0, geom.a, k)
        weights = 1j * rate * phases
        if detector.channel == "T":
            if drive.mode == "gaussian":
                scalar = drive.amplitude * math.pi * drive.w0**2 * math.exp(-kp2 * drive.w0**2 / 4.0)
            else:
                scalar = drive.amplitude * geom.a**2 * geom.n_atoms if kp2 == 0.0 else 0.0
        else:
            scalar = 0.0
        return complex(scalar), weights
    if isinstance(detector, ModeDetector):
        direction = +1 if detector.channel == "T" else -1
        mode = GaussianMode(detector.mode.w0, direction, k)
        weights = 1j * (3.0 * math.pi / k**2) * np.conj(mode.mode_function(pos))
        if detector.channel == "T":
            if drive.mode != "gaussian" or drive.w0 != mode.w0:
                raise InvalidParameterError("transmitted mode detection requires a matched drive")
            scalar = drive.amplitude * math.sqrt(math.pi / 2.0) * drive.w0
        else:
            scalar = 0.0
        return complex(scalar), weights
    raise InvalidParameterError("unknown detector type")


def apply_field(
    psi: TruncatedState,
    detector,
    geom: LatticeGeometry,
    drive: DriveSpec,
    k: float = K_A,
) -> TruncatedState:
    """Act with the detected-field operator scalar + sum_n w_n lower_n."""
    s, w = _detector_parts(detector, geom, drive, k)
    out0 = s * psi.c0 + np.dot(w, psi.c1)
    out1 = s * psi.c1 + psi.c2 @ w
    out2 = s * psi.c2
    return TruncatedState(out0, out1, out2)


def g2_numeric(
    geom: LatticeGeometry,
    drive: DriveSpec,
    delta: float,
    t_grid,
    detector=None,
    k: float = K_A,
    dt: float = 1e-2,
    method: str = "rk4",
    ss_mode: str = "perturbative",
) -> np.ndarray:
    """Normalized two-photon correlation g2(t) in a detection channel: detect
    one photon from the steady state, keep driving, detect again after t."""
    if detector is None:
        detector = ModeDetector(GaussianMode(drive.w0), "R")
    psi_ss = steady_state(geom, drive, delta, mode=ss_mode, k=k)
    psi_ss = psi_ss.scaled(1.0 / psi_ss.norm())
    e_ss = apply_field(psi_ss, detector, geom, drive, k)
    intensity = e_ss.norm2()
    if intensity <= 0.0:
        raise ZeroIntensityError("detected steady-state intensity vanishes")
    psi0 = e_ss.scaled(1.0 / e_ss.norm())
    h = EffectiveHamiltonian(geom, delta, drive_amplitudes(geom, drive, k), k)
    out = np.empty(len(t_grid))
    for i, (_, psi_t) in enumerate(evolve(psi0, h, t_grid, dt=dt, method=method)):
        conditional = psi_t.scaled(1.0 / psi_t.norm())
        out[i] = apply_field(conditional, detector, geom, drive, k).norm2() / intensity
    return out


def momentum_density(
    geom: LatticeGeometry,
    drive: DriveSpec,
    delta: float,
    k1_perp,
    k2_perp,
    t: float,
    channels: tuple[str, str] = ("T", "T"),
    k: float = K_A,
    dt: float = 1e-2,
    psi_ss: TruncatedState | None = None,
) -> float:
    """Unnormalized two-photon momentum density: squared norm after detecting
    k1 from the steady state, evolving for t, and detecting k2."""
    if psi_ss is None:
        psi_ss = steady_state(geom, drive, delta, k=k)
        psi_ss = psi_ss.scaled(1.0 / psi_ss.norm())
    d1 = MomentumDetector((float(k1_perp[0]), float(k1_perp[1])), channels[0])
    d2 = MomentumDetector((float(k2_perp[0]), float(k2_perp[1])), channels[1])
    psi = apply_field(psi_ss, d1, geom, drive, k)
    if t > 0.0:
        h = EffectiveHamiltonian(geom, delta, drive_amplitudes(geom, drive, k), k)
        (_, psi), = evolve(psi, h, [t], dt=dt)
    return apply_field(psi, d2, geom, drive, k).norm2()


def dominant_state_fit(t_grid, series, b_ss: complex | None = None):
    """Fit b(t) = b_ss + (b0 - b_ss) e^{(i*shift - rate) t} to a projection
    time series; returns (shift, rate, effective drive -b_ss*(shift + i*rate),
    residual norm)."""
    t_grid = np.asarray(t_grid, dtype=float)
    series = np.asarray(series, dtype=complex)
    if b_ss is None:
        b_ss = series[-1]
    b0 = series[0]

    def model(p):
        shift, rate = p
        return b_ss + (b0 - b_ss) * np.exp((1j * shift - rate) * t_grid)

    def resid(p):
        d = model(p) - series
        return np.concatenate([d.real, d.imag])

    # crude rate guess from the envelope decay
    env = np.abs(series - b_ss)
    good = env > env[0] * 1e-6
    rate0 = 1.0
    if np.count_nonzero(good) > 2:
        slope = np.polyfit(t_grid[good], np.log(env[good]), 1)[0]
        rate0 = max(-float(slope), 1e-3)
    fit = least_squares(resid, x0=[0.0, rate0], method="lm")
    if not fit.success:
        raise NonConvergenceError("dominant-state fit did not converge")
    shift, rate = fit.x
    g_eff = -b_ss * (shift + 1j * rate)
    return float(shift), float(rate), complex(g_eff), float(np.linalg.norm(fit.fun))
