"""Parameter estimation, phase-noise model and asymptotic key rate.

Conventions (per quadrature, SNU): Alice modulates with variance ``v_mod``;
Bob's heterodyne output, normalized to shot noise, has variance

    V_meas = tau * eta / 2 * v_mod + 1 + t + u / 2

with ``u`` referred to the detector input (see :class:`~cvqkd.core.LinkParams`).
Eve controls the channel only; ``tau`` and ``t`` are trusted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import LinkParams


class PhysicalityError(ValueError):
    """Covariance matrix violates the uncertainty principle."""


# ------------------------------------------------------------ phase noise


def phase_excess_noise(v_mod: float, v_est: float) -> float:
    """Excess noise caused by a residual phase error of variance ``v_est``.

    ``2 v_mod (1 - exp(-v_est / 2))``; close to ``v_mod * v_est`` for small
    ``v_est`` and bounded by ``2 v_mod``.
    """
    if not v_mod > 0:
        raise ValueError("v_mod must be positive")
    if v_est < 0:
        raise ValueError("v_est must be non-negative")
    return -2.0 * v_mod * math.expm1(-v_est / 2.0)


# ------------------------------------------------------------- estimation


@dataclass(frozen=True)
class NoiseBudget:
    """Per-frame estimates. ``xi_*`` use the same referral as ``LinkParams.u``.

    ``flags`` lists estimator warnings: ``"uncorrelated"`` when Alice's and
    Bob's data show no significant correlation, ``"negative_gain"``,
    ``"negative_xi"``, ``"eta_out_of_range"``.
    """

    eta_hat: float
    xi_I: float
    xi_Q: float
    v_est: float = math.nan
    frame_id: int = 0
    n: int = 0
    v_meas: float = math.nan
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def xi(self) -> float:
        return 0.5 * (self.xi_I + self.xi_Q)

    @property
    def xi_se(self) -> float:
        """Analytic standard error of :attr:`xi` (both quadratures pooled)."""
        return excess_noise_se(self.v_meas, 2 * self.n)


def excess_noise_se(v_meas: float, n: int) -> float:
    """Standard error of the excess-noise estimate from ``n`` real samples."""
    return v_meas * math.sqrt(2.0 / n) / 0.5


def estimate_channel(
    tx_ref,
    rx_ref,
    params: LinkParams,
    v_est: float = math.nan,
    frame_id: int = 0,
    shot_noise: float = 1.0,
) -> NoiseBudget:
    """Invert the measurement model on disclosed (Alice, Bob) pairs.

    Per quadrature: gain ``g = cov(A, B) / var(A)``, ``eta = 2 g^2 / tau``
    and ``xi = (var(B) - g^2 var(A) - shot_noise - t) / (1/2)``.
    ``shot_noise=0`` suits simulations without shot noise.
    """
    a = np.asarray(tx_ref, dtype=complex)
    b = np.asarray(rx_ref, dtype=complex)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("tx_ref and rx_ref must be 1-D and of equal length")
    if a.size < 2:
        raise ValueError("need at least two disclosed pairs")
    flags = []
    etas, xis, vbs = [], [], []
    for xa, xb in ((a.real, b.real), (a.imag, b.imag)):
        va = float(np.var(xa))
        if va == 0:
            raise ValueError("Alice's disclosed data have zero variance")
        vb = float(np.var(xb))
        cab = float(np.mean((xa - xa.mean()) * (xb - xb.mean())))
        g = cab / va
        if g < 0:
            flags.append("negative_gain")
        if vb > 0 and abs(cab) / math.sqrt(va * vb) * math.sqrt(xa.size) < 3.0:
            flags.append("uncorrelated")
        etas.append(2.0 * g * g / params.tau)
        xis.append((vb - g * g * va - shot_noise - params.t) / 0.5)
        vbs.append(vb)
    eta_hat = 0.5 * (etas[0] + etas[1])
    if min(xis) < 0:
        flags.append("negative_xi")
    if not 0 <= eta_hat <= 1.05:
        flags.append("eta_out_of_range")
    return NoiseBudget(
        eta_hat, xis[0], xis[1], v_est, frame_id, a.size, 0.5 * (vbs[0] + vbs[1]),
        tuple(dict.fromkeys(flags)),
    )


# --------------------------------------------------------------- key rate


def _per_quadrature(xi_total, default: float) -> tuple[float, float]:
    if xi_total is None:
        return default, default
    arr = np.atleast_1d(np.asarray(xi_total, dtype=float))
    if arr.size == 1:
        return float(arr[0]), float(arr[0])
    if arr.size == 2:
        return float(arr[0]), float(arr[1])
    raise ValueError("xi_total must be a scalar or an (I, Q) pair")


def snr(params: LinkParams, xi_total: float | None = None) -> float:
    """Per-quadrature signal-to-noise ratio of Bob's measurement."""
    xi = params.u if xi_total is None else xi_total
    return 0.5 * params.tau * params.eta * params.v_mod / (1.0 + params.t + 0.5 * xi)


def mutual_information(params: LinkParams, xi_total=None) -> float:
    """Alice-Bob mutual information for heterodyne detection, bits/symbol.

    ``xi_total`` may be a scalar or an (I, Q) pair; ``None`` uses ``params.u``.
    """
    xi_i, xi_q = _per_quadrature(xi_total, params.u)
    return 0.5 * (math.log2(1 + snr(params, xi_i)) + math.log2(1 + snr(params, xi_q)))


def entropy_g(x) -> np.ndarray:
    """Bosonic entropy ``(x+1) log2(x+1) - x log2 x`` with ``g(0) = 0``."""
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    xlogx = x * np.log2(np.where(x > 0, x, 1.0))
    return (x + 1) * np.log2(x + 1) - xlogx


def _omega(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(gamma) -> np.ndarray:
    """Symplectic spectrum of a (2n x 2n) covariance matrix in (x1, p1, x2, p2, ...) order."""
    gamma = np.asarray(gamma, dtype=float)
    n = gamma.shape[0] // 2
    ev = np.sort(np.abs(np.linalg.eigvals(1j * _omega(n) @ gamma)))
    return ev[::2]


def von_neumann_entropy(gamma, tol: float = 1e-9) -> float:
    nu = symplectic_eigenvalues(gamma)
    if np.any(nu < 1 - tol):
        raise PhysicalityError(f"symplectic eigenvalue {nu.min():.12g} < 1")
    return float(np.sum(entropy_g((nu - 1) / 2)))


def _beamsplitter(n_modes: int, i: int, j: int, transmittance: float) -> np.ndarray:
    s = np.eye(2 * n_modes)
    ct, st = math.sqrt(transmittance), math.sqrt(1 - transmittance)
    for q in range(2):
        ii, jj = 2 * i + q, 2 * j + q
        s[ii, ii], s[ii, jj] = ct, st
        s[jj, ii], s[jj, jj] = -st, ct
    return s


def holevo_bound(params: LinkParams, xi_total=None) -> float:
    """Eve's information on Bob's heterodyne data (reverse reconciliation).

    Entangling-cloner model: Eve holds the purification of Alice-Bob's
    two-mode state at the channel output. The trusted detector (``tau``,
    ``t``) is rewritten as a beam splitter onto a vacuum mode, held by
    nobody, followed by ideal heterodyne, so that ``S(E|m)`` equals the
    conditional entropy of Alice's mode and the splitter's idle port.
    ``xi_total`` (scalar or I/Q pair, detector-referred like ``u``) is
    allowed to differ between quadratures.
    """
    xi_i, xi_q = _per_quadrature(xi_total, params.u)
    v = params.v_mod + 1.0
    eta, tau, t = params.eta, params.tau, params.t
    a = v
    c = math.sqrt(eta * (v * v - 1.0))
    b_i = eta * (v - 1.0) + 1.0 + xi_i / tau
    b_q = eta * (v - 1.0) + 1.0 + xi_q / tau
    gab = np.array([
        [a, 0, c, 0],
        [0, a, 0, -c],
        [c, 0, b_i, 0],
        [0, -c, 0, b_q],
    ])
    s_ab = von_neumann_entropy(gab)

    # modes A, B, F (vacuum); the splitter sends B to the ideal detector
    g3 = np.eye(6)
    g3[:4, :4] = gab
    tau_eff = tau / (1.0 + t)
    s = _beamsplitter(3, 1, 2, tau_eff)
    g3 = s @ g3 @ s.T
    keep = [0, 1, 4, 5]
    meas = [2, 3]
    g_x = g3[np.ix_(keep, keep)]
    g_m = g3[np.ix_(meas, meas)]
    sig = g3[np.ix_(keep, meas)]
    g_cond = g_x - sig @ np.linalg.solve(g_m + np.eye(2), sig.T)
    s_cond = von_neumann_entropy(g_cond)
    return max(s_ab - s_cond, 0.0)


@dataclass(frozen=True)
class KeyRateResult:
    i_ab: float
    holevo: float
    key_fraction: float
    key_rate_bps: float


def key_fraction(params: LinkParams, xi_total=None) -> KeyRateResult:
    """Asymptotic key fraction ``max(0, (1 - FER)(beta I_AB - chi))``."""
    i_ab = mutual_information(params, xi_total)
    chi = holevo_bound(params, xi_total)
    k = max(0.0, (1.0 - params.fer) * (params.beta * i_ab - chi))
    return KeyRateResult(i_ab, chi, k, k * params.baud)
