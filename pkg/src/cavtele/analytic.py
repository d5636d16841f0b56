"""Closed-form expressions for the compensated cavity-decay teleportation protocol.

Everything here uses the adiabatic (two-level) description of each
atom-cavity system, ignores spontaneous emission, and works with angular
rates in rad/us. ``detector`` is ``"resolving"`` for photon-number
resolving detectors and ``"conventional"`` otherwise.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy import integrate

from .params import InputQubit, PulseSchedule, SystemParams, qubit_fidelity

MODES = ("modified", "original")
DETECTORS = ("resolving", "conventional")


def _check_detector(detector):
    if detector not in DETECTORS:
        raise ValueError(f"detector must be one of {DETECTORS}, got {detector!r}")


def _check_eta(eta):
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")


def ab_coefficients(t, p: SystemParams):
    """Amplitudes a(t), b(t) of the laser-on evolution of |1 0>.

    exp(-iHt)|10> = exp(i*delta*t) exp(-kappa*t/2) [i a(t)|01> + b(t)|10>].
    """
    omega_k = p.omega_kappa
    x = 0.5 * omega_k * np.asarray(t, dtype=float)
    s = np.sin(x)
    a = 2.0 * p.delta_eff / omega_k * s
    b = np.cos(x) + p.kappa / omega_k * s
    if np.ndim(a) == 0:
        return float(a), float(b)
    return a, b


def mapping_time(p: SystemParams) -> float:
    """Pulse length that empties |10> into |01> (b(t_A) = 0)."""
    omega_k = p.omega_kappa
    return 2.0 / omega_k * (math.pi - math.atan2(omega_k, p.kappa))


def entangling_time(t_A: float, p: SystemParams, n: int = 0) -> float:
    """Bob's pulse length that satisfies exp(-kappa t_A/2) b(t_B) = a(t_B).

    ``atan2`` keeps the principal branch in (0, pi) even when
    2*delta < exp(-kappa t_A/2)*kappa.
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"branch index must be a non-negative integer, got {n!r}")
    omega_k = p.omega_kappa
    damp = math.exp(-0.5 * p.kappa * t_A)
    angle = math.atan2(omega_k * damp, 2.0 * p.delta_eff - damp * p.kappa)
    return 2.0 / omega_k * (angle + n * math.pi)


def balanced_entangling_time(p: SystemParams, n: int = 0) -> float:
    """Pulse length giving a(t_B) = b(t_B), the maximally entangled choice."""
    return entangling_time(0.0, p, n)


def compensation_residual(t_A: float, t_B: float, p: SystemParams) -> float:
    a, b = ab_coefficients(t_B, p)
    return abs(math.exp(-0.5 * p.kappa * t_A) * b - a)


def schedule(p: SystemParams, mode: str = "modified", t_d_factor: float = 4.0, branch_n: int = 0,
             t_D: float | None = None) -> PulseSchedule:
    """Analytic pulse schedule; t_D defaults to t_d_factor/kappa."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    t_A = mapping_time(p)
    if mode == "modified":
        t_B = entangling_time(t_A, p, branch_n)
    else:
        t_B = balanced_entangling_time(p, branch_n)
    if t_D is None:
        if p.kappa <= 0:
            raise ValueError("t_D must be given explicitly when kappa = 0")
        t_D = t_d_factor / p.kappa
    return PulseSchedule(t_A, t_B, t_D, branch_n)


def mapped_alice_state(q: InputQubit, s: PulseSchedule, p: SystemParams) -> np.ndarray:
    """Unnormalized Alice amplitudes on (|00>, |01>, |10>) after her pulse."""
    a, b = ab_coefficients(s.t_A, p)
    pref = cmath.exp(1j * p.delta_eff * s.t_A) * math.exp(-0.5 * p.kappa * s.t_A) * q.beta
    return np.array([q.alpha, 1j * a * pref, b * pref])


def bob_resource_state(s: PulseSchedule, p: SystemParams) -> np.ndarray:
    """Unnormalized Bob amplitudes on (|00>, |01>, |10>), global phase dropped."""
    a, b = ab_coefficients(s.t_B, p)
    damp = math.exp(-0.5 * p.kappa * s.t_B)
    return np.array([0.0, 1j * a * damp, b * damp])


def prep_success_probs(q: InputQubit, s: PulseSchedule, p: SystemParams):
    """Probabilities that neither pulse leaks a photon: (P_A, P_B)."""
    a_B, b_B = ab_coefficients(s.t_B, p)
    P_A = abs(q.alpha) ** 2 + math.exp(-p.kappa * s.t_A) * abs(q.beta) ** 2
    P_B = math.exp(-p.kappa * s.t_B) * (a_B**2 + b_B**2)
    return P_A, P_B


def survival_probs(t_j: float, q: InputQubit, s: PulseSchedule, p: SystemParams):
    """Conditional probabilities of no emission from each side up to t_j after the pulses."""
    if t_j < 0:
        raise ValueError("t_j must be non-negative")
    a2 = abs(q.alpha) ** 2
    b2 = abs(q.beta) ** 2
    k = p.kappa
    P_A = (a2 + math.exp(-k * (s.t_A + 2 * t_j)) * b2) / (a2 + math.exp(-k * s.t_A) * b2)
    aB, bB = ab_coefficients(s.t_B, p)
    P_B = (aB**2 * math.exp(-2 * k * t_j) + bB**2) / (aB**2 + bB**2)
    return P_A, P_B


def final_bob_state(q: InputQubit, p: SystemParams, epsilon: int = 1, mode: str = "modified",
                    s: PulseSchedule | None = None) -> InputQubit:
    """Bob's atom after a single click in detector ``epsilon``, before correction.

    For long detection windows Bob's atom ends in
    (i*eps*alpha*a(t_B)|0> + e^{i delta t_A} e^{-kappa t_A/2} beta b(t_B)|1>)/norm.
    """
    if epsilon not in (1, -1):
        raise ValueError("epsilon must be +1 or -1")
    if s is None:
        s = schedule(p, mode)
    a, b = ab_coefficients(s.t_B, p)
    c0 = epsilon * 1j * a * q.alpha
    c1 = cmath.exp(1j * p.delta_eff * s.t_A) * math.exp(-0.5 * p.kappa * s.t_A) * b * q.beta
    return InputQubit.normalized(c0, c1)


def zeeman_phase(p: SystemParams, t_A: float, epsilon: int) -> complex:
    """Relative phase -i*eps*e^{i delta t_A} left on |1> by the protocol."""
    return -1j * epsilon * cmath.exp(1j * p.delta_eff * t_A)


def phase_correct(state: InputQubit, phase: complex) -> InputQubit:
    """Remove a known relative phase from the |1> amplitude."""
    unit = phase / abs(phase)
    return InputQubit(state.alpha, state.beta / unit)


def corrected_bob_state(q: InputQubit, p: SystemParams, epsilon: int = 1, mode: str = "modified",
                        s: PulseSchedule | None = None) -> InputQubit:
    if s is None:
        s = schedule(p, mode)
    raw = final_bob_state(q, p, epsilon, mode, s)
    return phase_correct(raw, zeeman_phase(p, s.t_A, epsilon))


def bob_fidelity(q: InputQubit, p: SystemParams, epsilon: int = 1, mode: str = "modified",
                 s: PulseSchedule | None = None) -> float:
    """Fidelity of the corrected single-click state with the input."""
    return qubit_fidelity(q, corrected_bob_state(q, p, epsilon, mode, s).vector)


def single_photon_probability(q: InputQubit, s: PulseSchedule, p: SystemParams) -> float:
    """Long-window probability of exactly one emission for any t_B."""
    a, b = ab_coefficients(s.t_B, p)
    return math.exp(-p.kappa * s.t_B) * (
        abs(q.beta) ** 2 * math.exp(-p.kappa * s.t_A) * b**2 + abs(q.alpha) ** 2 * a**2
    )


def _adaptive_trapezoid(f, lo, hi, rtol=1e-8, n0=64, max_level=18):
    n = n0
    x = np.linspace(lo, hi, n + 1)
    y = f(x)
    h = (hi - lo) / n
    total = h * (0.5 * y[0] + y[1:-1].sum() + 0.5 * y[-1])
    for _ in range(max_level):
        mids = lo + h * (np.arange(n) + 0.5)
        refined = 0.5 * total + 0.5 * h * f(mids).sum()
        n *= 2
        h *= 0.5
        if abs(refined - total) <= rtol * abs(refined):
            return refined
        total = refined
    raise RuntimeError(f"trapezoid quadrature did not reach rtol={rtol:g} with {n} intervals; step too coarse")


def _one_click_density(q: InputQubit, s: PulseSchedule, p: SystemParams):
    """Vectorized density of 'exactly one click at t_j, none afterwards'.

    Works directly with the unnormalized product state entering the
    detection stage, components ordered (|00>, |01>, |10>) per side. With the
    lasers off only the one-photon component evolves, by exp((i*delta - kappa) t).
    """
    A = mapped_alice_state(q, s, p)
    B = bob_resource_state(s, p)
    k, d = p.kappa, p.delta_eff
    t_D = s.t_D
    # photon-free parts; index 0 is |00>, index 2 is the inert |10>
    A00, A1, A10 = A
    B00, B1, B10 = B

    def density(t):
        t = np.asarray(t, dtype=float)
        f = np.exp((1j * d - k) * t)
        f_rest = np.exp(-2.0 * k * (t_D - t))
        total = np.zeros_like(t)
        for eps in (1, -1):
            # post-jump amplitudes (times 1/sqrt(kappa)) on the joint basis
            c_00_00 = A1 * f * B00 + 1j * eps * B1 * f * A00
            c_00_10 = A1 * f * B10
            c_10_00 = 1j * eps * B1 * f * A10
            c_00_01 = A1 * f * B1 * f
            c_01_00 = 1j * eps * B1 * f * A1 * f
            stay = abs(c_00_00) ** 2 + abs(c_00_10) ** 2 + abs(c_10_00) ** 2
            leak = (abs(c_00_01) ** 2 + abs(c_01_00) ** 2) * f_rest
            total = total + k * (stay + leak)
        return total

    return density


def success_probability(s: PulseSchedule, p: SystemParams, method: str = "closed_form",
                        q: InputQubit | None = None, rtol: float = 1e-8) -> float:
    """Probability that the run produces exactly one photon.

    ``closed_form`` is exp(-kappa t_B) a(t_B)**2 (long window, compensated
    t_B); ``quadrature`` integrates the one-click density over [0, t_D].
    """
    if method == "closed_form":
        a, _ = ab_coefficients(s.t_B, p)
        return math.exp(-p.kappa * s.t_B) * a**2
    if method == "quadrature":
        if q is None:
            q = InputQubit(1 / math.sqrt(2), 1 / math.sqrt(2))
        if s.t_D == 0:
            return 0.0
        return float(_adaptive_trapezoid(_one_click_density(q, s, p), 0.0, s.t_D, rtol=rtol))
    raise ValueError(f"unknown method {method!r}")


def xi_factor(p_suc: float, detector: str) -> float:
    _check_detector(detector)
    return 1.0 if detector == "resolving" else 1.0 - p_suc


def two_photon_prob(q: InputQubit, eta: float, s: PulseSchedule, p: SystemParams, detector: str) -> float:
    """Probability of two emissions with only one indicated click."""
    _check_eta(eta)
    xi = xi_factor(success_probability(s, p), detector)
    return abs(q.beta) ** 2 * math.exp(-p.kappa * s.t_A) * eta * (1.0 - eta * xi)


def average_two_photon_prob(eta: float, s: PulseSchedule, p: SystemParams, detector: str) -> float:
    _check_eta(eta)
    xi = xi_factor(success_probability(s, p), detector)
    return math.exp(-p.kappa * s.t_A) * eta * (1.0 - eta * xi) / 2.0


def average_success(eta: float, s: PulseSchedule, p: SystemParams, detector: str) -> float:
    """Input-averaged probability that the detectors indicate success."""
    return eta * success_probability(s, p) + average_two_photon_prob(eta, s, p, detector)


def average_fidelity(eta: float, s: PulseSchedule, p: SystemParams, detector: str) -> float:
    """Input-averaged fidelity of the post-selected mixture of |phi> and |0>."""
    _check_eta(eta)
    p_suc = success_probability(s, p)
    B = math.exp(-p.kappa * s.t_A) * (1.0 - eta * xi_factor(p_suc, detector))
    if B <= 0.0:
        return 1.0
    if p_suc <= 0.0:
        return 0.5
    y = B / p_suc
    if y < 1e-3:
        # expansion of 1/2 + r - r^2 ln(1 + 1/r) in y = 1/r; avoids cancellation
        return 1.0 - y / 3 + y**2 / 4 - y**3 / 5 + y**4 / 6
    r = 1.0 / y
    return 0.5 + r - r * r * math.log1p(y)


def mixed_final_state(q: InputQubit, eta: float, s: PulseSchedule, p: SystemParams, detector: str) -> np.ndarray:
    """2x2 density matrix of Bob's atom over indicated successes."""
    _check_eta(eta)
    w_good = eta * success_probability(s, p)
    w_bad = two_photon_prob(q, eta, s, p, detector)
    denom = w_good + w_bad
    if denom <= 0.0:
        raise ValueError("no indicated successes (eta = 0)")
    phi = q.vector
    rho = w_good * np.outer(phi, phi.conj())
    rho[0, 0] += w_bad
    return rho / denom


def original_fidelity_curve(x, s: PulseSchedule, p: SystemParams):
    """Corrected single-click fidelity vs |beta|^2 for an arbitrary t_B."""
    a, b = ab_coefficients(s.t_B, p)
    c = math.exp(-0.5 * p.kappa * s.t_A) * b / a
    x = np.asarray(x, dtype=float)
    return ((1 - x) + c * x) ** 2 / ((1 - x) + c * c * x)


def haar_average_fidelity(s: PulseSchedule, p: SystemParams) -> float:
    """Input-averaged single-click fidelity with ideal detection.

    |beta|^2 is uniform on [0, 1] under the Haar measure, so the average is a
    one-dimensional integral.
    """
    val, _ = integrate.quad(lambda x: float(original_fidelity_curve(x, s, p)), 0.0, 1.0,
                            epsabs=1e-13, epsrel=1e-12)
    return val


def haar_average_success(s: PulseSchedule, p: SystemParams) -> float:
    """Input-averaged single-photon probability for any t_B (ideal detection)."""
    a, b = ab_coefficients(s.t_B, p)
    return math.exp(-p.kappa * s.t_B) * (math.exp(-p.kappa * s.t_A) * b**2 + a**2) / 2.0
