"""Rapid-decay feedback synthesis and minimum-norm steering controls.

Feedback with a prescribed decay rate mu comes from the stabilizing
solution of the shift-by-mu Riccati equation

    (A + mu I)^T P + P (A + mu I) - P B B^T P + I = 0,

solved on the stable invariant subspace of the associated Hamiltonian
matrix (ordered real Schur form) with one Newton refinement.  Undoing the
shift moves every closed-loop eigenvalue of A + BK, K = -B^T P, left of
-mu.  The remaining operations build the minimum-norm controls that steer
into a contraction ball and concatenate them into a geometrically decaying
control with finite exponentially-weighted norm.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import schur, solve_continuous_lyapunov

from ._quadrature import integrate_adaptive
from .semigroup import (DEFAULT_QUAD, QuadratureSpec, observability_gramian,
                        transition_matrix)
from .systems import LtiSystem
from .weakobs import CERTIFIED, CertificateFamily

__all__ = [
    "UnstabilizableError",
    "SteeringError",
    "FeedbackResult",
    "SteeringSegment",
    "ControlSignal",
    "DecayReport",
    "solve_shifted_riccati",
    "closed_loop_rate",
    "min_norm_eps_null",
    "concatenated_control",
    "certificate_to_feedback",
]


class UnstabilizableError(RuntimeError):
    """The shifted pair has an uncontrollable unstable eigenvalue."""

    def __init__(self, eigenvalue):
        self.eigenvalue = eigenvalue
        super().__init__(
            f"shifted pair is not stabilizable: eigenvalue "
            f"{eigenvalue:.6g} with nonnegative real part is invisible "
            f"to the control operator")


class SteeringError(RuntimeError):
    """A requested terminal tolerance cannot be reached."""


@dataclass(frozen=True)
class FeedbackResult:
    """Synthesized feedback with its measured closed-loop behaviour."""

    mu: float
    riccati_p: np.ndarray
    gain_k: np.ndarray
    residual: float
    measured_rate: float
    measured_overshoot: float
    certificate_chain: Optional[dict] = None

    def __post_init__(self):
        p = np.asarray(self.riccati_p, dtype=float)
        scale = max(np.abs(p).max(), 1.0)
        if np.abs(p - p.T).max() > 1e-10 * scale:
            raise ValueError("riccati solution must be symmetric")
        sym = 0.5 * (p + p.T)
        sym.setflags(write=False)
        object.__setattr__(self, "riccati_p", sym)
        if np.linalg.eigvalsh(sym).min() < -1e-10 * scale:
            raise ValueError("riccati solution must be PSD")
        if self.residual > 1e-8 * (1.0 + np.linalg.norm(sym)) ** 2:
            raise ValueError(f"riccati residual {self.residual:.3e} too large")


def _pbh_stabilizable(a_shift, b):
    """PBH test; returns the offending eigenvalue or None."""
    n = a_shift.shape[0]
    scale = max(np.linalg.norm(a_shift, 2) + np.linalg.norm(b, 2), 1.0)
    for lam in np.linalg.eigvals(a_shift):
        if lam.real < -1e-9 * scale:
            continue
        pencil = np.hstack([lam * np.eye(n) - a_shift, b.astype(complex)])
        smin = np.linalg.svd(pencil, compute_uv=False)[-1]
        if smin <= 1e-10 * scale:
            return lam
    return None


def solve_shifted_riccati(sys: LtiSystem, mu: float,
                          rate_horizon: float = 10.0,
                          rate_grid: int = 200) -> FeedbackResult:
    """Feedback gain pushing every closed-loop eigenvalue left of -mu."""
    if mu <= 0:
        raise ValueError("target rate mu must be positive")
    a = sys.a_matrix
    b = sys.b_matrix
    n = sys.n
    a_shift = a + mu * np.eye(n)
    bad = _pbh_stabilizable(a_shift, b)
    if bad is not None:
        raise UnstabilizableError(complex(bad))

    bbt = b @ b.T
    ham = np.block([[a_shift, -bbt],
                    [-np.eye(n), -a_shift.T]])
    _, z, sdim = schur(ham, output="real", sort=lambda re, im: re < 0.0)
    if sdim != n:
        raise UnstabilizableError(complex(np.nan))
    x1 = z[:n, :n]
    x2 = z[n:, :n]
    p = np.linalg.solve(x1.T, x2.T).T
    p = 0.5 * (p + p.T)

    def residual_of(pm):
        return a_shift.T @ pm + pm @ a_shift - pm @ bbt @ pm + np.eye(n)

    # one Newton step: tightens the residual by orders of magnitude
    res = residual_of(p)
    a_cl_shift = a_shift - bbt @ p
    try:
        delta = solve_continuous_lyapunov(a_cl_shift.T, -res)
        p_ref = 0.5 * ((p + delta) + (p + delta).T)
        if np.linalg.norm(residual_of(p_ref)) < np.linalg.norm(res):
            p = p_ref
    except np.linalg.LinAlgError:
        pass
    res_norm = float(np.linalg.norm(residual_of(p)))

    gain = -b.T @ p
    rate, overshoot = closed_loop_rate(sys, gain, horizon=rate_horizon,
                                       grid=rate_grid)
    if rate < mu - 1e-8:
        raise RuntimeError(
            f"synthesis missed the target: measured rate {rate:.6g} < "
            f"mu={mu:.6g}")
    return FeedbackResult(mu=mu, riccati_p=p, gain_k=gain,
                          residual=res_norm, measured_rate=rate,
                          measured_overshoot=overshoot)


def closed_loop_rate(sys: LtiSystem, gain, horizon: float = 10.0,
                     grid: int = 200):
    """(rate, overshoot) of A + B K.

    rate is minus the spectral abscissa; overshoot is the grid maximum of
    ||e^{(A+BK) t}|| e^{rate t}, i.e. the transient constant in front of
    the decay.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    gain = np.atleast_2d(np.asarray(gain, dtype=float))
    a_cl = sys.a_matrix + sys.b_matrix @ gain
    rate = -float(np.max(np.linalg.eigvals(a_cl).real))
    closed = LtiSystem(a_cl, sys.b_matrix, label="closed-loop")
    overshoot = 0.0
    for t in np.linspace(0.0, horizon, grid):
        norm = np.linalg.norm(transition_matrix(closed, float(t)), 2)
        overshoot = max(overshoot, norm * math.exp(rate * t))
    return rate, float(overshoot)


# ---------------------------------------------------------------------------
# minimum-norm steering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SteeringSegment:
    """u(t) = -B^T e^{A^T (t_stop - t)} eta on [t_start, t_stop)."""

    t_start: float
    t_stop: float
    eta: np.ndarray

    def local_time(self, t):
        return self.t_stop - t


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise steering control with its exact L2 norm."""

    breakpoints: tuple
    segments: tuple
    l2_norm: float
    sys: LtiSystem = field(repr=False, default=None)

    def evaluate(self, t: float):
        for seg in self.segments:
            if seg.t_start <= t < seg.t_stop or (t == seg.t_stop
                                                 and seg is self.segments[-1]):
                back = seg.t_stop - t
                return -(self.sys.b_matrix.T
                         @ transition_matrix(self.sys, back, adjoint=True)
                         @ seg.eta)
        return np.zeros(self.sys.m)

    def l2_norm_by_quadrature(self, rel_tol=1e-10):
        total = 0.0
        for seg in self.segments:
            val, _ = integrate_adaptive(
                lambda t: float(np.sum(self.evaluate(t) ** 2)),
                seg.t_start, seg.t_stop, panels=16, npts=8, rel_tol=rel_tol)
            total += val
        return math.sqrt(total)


def _steer(sys, horizon, eps, y0, gram, quad):
    """eta, terminal state and control norm for one steering segment.

    Solves the regularized normal equations eta = (G + nu I)^{-1} e^{AT} y0
    with nu bisected so the terminal norm lands on (never above)
    eps * ||y0||; nu = 0 when the exact null control already satisfies it.
    """
    n = sys.n
    z = transition_matrix(sys, horizon) @ y0
    ny0 = float(np.linalg.norm(y0))
    if ny0 == 0.0:
        return np.zeros(n), z, 0.0
    target = eps * ny0
    if np.linalg.norm(z) <= target:
        return np.zeros(n), z, 0.0

    gmax = float(np.linalg.eigvalsh(gram).max())
    eta_exact, *_ = np.linalg.lstsq(gram, z, rcond=1e-13)
    term_exact = z - gram @ eta_exact
    if eps == 0.0:
        if np.linalg.norm(term_exact) > 1e-9 * np.linalg.norm(z):
            raise SteeringError(
                "exact null steering requires a nonsingular controllability "
                "Gramian; the residual component is unreachable")
        eta = eta_exact
    elif np.linalg.norm(term_exact) >= target:
        if np.linalg.norm(term_exact) <= target * (1.0 + 1e-9):
            eta = eta_exact
        else:
            raise SteeringError(
                f"terminal tolerance {eps:g}||y0|| is unreachable: the "
                f"uncontrollable component has norm "
                f"{np.linalg.norm(term_exact):.3e}")
    else:
        def terminal_norm(nu):
            eta_nu = np.linalg.solve(gram + nu * np.eye(n), z)
            return float(np.linalg.norm(z - gram @ eta_nu)), eta_nu

        nu_hi = max(gmax, 1e-12)
        f_hi, _ = terminal_norm(nu_hi)
        while f_hi < target:
            nu_hi *= 10.0
            f_hi, _ = terminal_norm(nu_hi)
            if nu_hi > 1e30:
                break
        nu_lo = 0.0
        eta = eta_exact
        for _ in range(60):
            nu_mid = 0.5 * (nu_lo + nu_hi) if nu_lo > 0 else nu_hi / 2.0
            f_mid, eta_mid = terminal_norm(nu_mid)
            if f_mid <= target:
                nu_lo, eta = nu_mid, eta_mid
            else:
                nu_hi = nu_mid
    terminal = z - gram @ eta
    l2 = math.sqrt(max(float(eta @ gram @ eta), 0.0))
    return eta, terminal, l2


def min_norm_eps_null(sys: LtiSystem, horizon: float, eps: float, y0,
                      quad: Optional[QuadratureSpec] = None) -> ControlSignal:
    """Minimum-norm control steering y0 into the ball eps*||y0|| at time T.

    The control has the closed form u(t) = -B^T e^{A^T (T-t)} eta with eta
    from the regularized Gramian solve; its L2 norm is sqrt(eta^T G eta).
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    y0 = np.asarray(y0, dtype=float)
    quad = quad or DEFAULT_QUAD
    gram = observability_gramian(sys, horizon, quad).matrix
    eta, _, l2 = _steer(sys, horizon, eps, y0, gram, quad)
    seg = SteeringSegment(0.0, horizon, eta)
    return ControlSignal(breakpoints=(0.0, horizon), segments=(seg,),
                         l2_norm=l2, sys=sys)


@dataclass(frozen=True)
class DecayReport:
    """Measured contraction of the concatenated steering scheme."""

    seg_length: float
    contraction: float                 # prescribed per-segment factor
    state_norms: tuple                 # ||y(i * seg_length)||
    control_norms: tuple               # L2 norm of each segment control
    fitted_gain: float                 # max ||u_i|| / (contraction^i ||y0||)
    weighted_l2: float                 # L2 norm of e^{beta t} u(t)
    weighted_sum_bound: float          # geometric-series bound on the above
    contraction_ok: bool
    geometric_ok: bool


def concatenated_control(sys: LtiSystem, beta: float, t_seg: float,
                         eps_seg: float, y0, segments: int,
                         quad: Optional[QuadratureSpec] = None):
    """Concatenate per-segment minimum-norm controls into a decaying scheme.

    Each segment steers the current state into the ball eps_seg*||state||;
    the states then contract geometrically, the segment control norms decay
    at the same ratio, and the exponentially weighted control e^{beta t} u
    has finite L2 norm as long as eps_seg <= e^{-2 beta t_seg}.
    """
    if beta <= 0 or t_seg <= 0 or segments < 1:
        raise ValueError("beta, t_seg and segments must be positive")
    if not 0.0 < eps_seg < 1.0:
        raise ValueError("eps_seg must lie in (0, 1)")
    if eps_seg > math.exp(-2.0 * beta * t_seg) * (1.0 + 1e-12):
        raise ValueError(
            f"contraction eps_seg={eps_seg:g} must not exceed "
            f"exp(-2 beta t_seg)={math.exp(-2.0 * beta * t_seg):g}")
    y0 = np.asarray(y0, dtype=float)
    quad = quad or DEFAULT_QUAD
    gram = observability_gramian(sys, t_seg, quad).matrix

    state = y0
    segs, state_norms, control_norms = [], [float(np.linalg.norm(y0))], []
    for i in range(segments):
        eta, terminal, l2 = _steer(sys, t_seg, eps_seg, state, gram, quad)
        segs.append(SteeringSegment(i * t_seg, (i + 1) * t_seg, eta))
        control_norms.append(l2)
        state = terminal
        state_norms.append(float(np.linalg.norm(state)))

    total_l2 = math.sqrt(sum(c**2 for c in control_norms))
    breakpoints = tuple(i * t_seg for i in range(segments + 1))
    signal = ControlSignal(breakpoints=breakpoints, segments=tuple(segs),
                           l2_norm=total_l2, sys=sys)

    ny0 = max(state_norms[0], 1e-300)
    contraction_ok = all(
        state_norms[i] <= eps_seg**i * ny0 * (1.0 + 1e-9)
        for i in range(len(state_norms)))
    fitted_gain = max((c / (eps_seg**i * ny0)
                       for i, c in enumerate(control_norms)), default=0.0)

    # L2 norm of the beta-weighted control, segment by segment
    weighted_sq = 0.0
    for seg in segs:
        def integrand(t, seg=seg):
            u = signal.evaluate(t)
            return math.exp(2.0 * beta * t) * float(np.sum(u**2))
        val, _ = integrate_adaptive(integrand, seg.t_start, seg.t_stop,
                                    panels=8, npts=8, rel_tol=1e-9)
        weighted_sq += val
    weighted_l2 = math.sqrt(weighted_sq)
    bound = (fitted_gain * ny0 * math.exp(beta * t_seg)
             / (1.0 - math.exp(-beta * t_seg)))
    report = DecayReport(
        seg_length=t_seg, contraction=eps_seg,
        state_norms=tuple(state_norms), control_norms=tuple(control_norms),
        fitted_gain=fitted_gain, weighted_l2=weighted_l2,
        weighted_sum_bound=bound, contraction_ok=contraction_ok,
        geometric_ok=weighted_l2 <= bound * (1.0 + 1e-9))
    return signal, report


def certificate_to_feedback(sys: LtiSystem, family: CertificateFamily,
                            mu: float) -> FeedbackResult:
    """Synthesize rate-mu feedback backed by a certified family entry.

    Picks the smallest certified integer index k with k > mu, selects its
    admissible horizon (exceeding both the family's t_zero and ln C), and
    delegates to the shifted Riccati synthesis; the selection is recorded
    on the result.
    """
    if mu <= 0:
        raise ValueError("target rate mu must be positive")
    candidates = []
    for alpha in family.alphas:
        k = round(alpha) - 1
        if abs(alpha - round(alpha)) < 1e-9 and k >= 1 \
                and family.alpha_certified(alpha):
            candidates.append(k)
    admissible = sorted(k for k in candidates if k > mu)
    if not admissible:
        raise ValueError(
            f"family has no certified integer entry with index above "
            f"mu={mu:g}")
    k = admissible[0]
    entries = [c for c in family.entries_for_alpha(float(k + 1))
               if c.status == CERTIFIED]
    c_val = entries[0].c_const
    horizon_ok = [c for c in entries
                  if c.horizon > family.t_zero
                  and c.horizon > math.log(c_val)]
    if not horizon_ok:
        raise ValueError(
            f"no certified horizon at index k={k} exceeds "
            f"max(t_zero, ln C)")
    pick = min(horizon_ok, key=lambda c: c.horizon)
    result = solve_shifted_riccati(sys, mu)
    chain = {
        "k": k,
        "alpha": float(k + 1),
        "horizon": pick.horizon,
        "d_const": pick.d_const,
        "c_const": pick.c_const,
        "residual_bound": math.exp(-k * pick.horizon),
    }
    return FeedbackResult(mu=result.mu, riccati_p=result.riccati_p,
                          gain_k=result.gain_k, residual=result.residual,
                          measured_rate=result.measured_rate,
                          measured_overshoot=result.measured_overshoot,
                          certificate_chain=chain)
