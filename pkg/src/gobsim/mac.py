"""Link-layer analysis: NOMA/OFDMA SINR with MRC combining, rates, fairness.

Power-domain NOMA superposes all users of a cluster on the full band and
relies on successive interference cancellation ordered by channel gain;
OFDMA gives each user disjoint bandwidth and power fractions.  Inter-
cluster interference is treated as noise in both schemes.  All SINR math
is linear; dB only appears at I/O boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllocationInvalid

SCHEMES = ("noma", "ofdma")


@dataclass(frozen=True)
class MacConfig:
    """Multi-access configuration shared by both schemes."""

    scheme: str = "noma"
    fft_size: int = 1024
    target_ber: float = 1e-3
    bandwidth: float = 2e9  # Hz
    tx_power: float = 0.01  # optical power per beam [W]

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.fft_size < 4:
            raise ValueError("FFT size too small")
        if not 0.0 < self.target_ber < 0.2:
            raise ValueError("target BER must lie in (0, 0.2)")
        if self.bandwidth <= 0.0 or self.tx_power <= 0.0:
            raise ValueError("bandwidth and power must be positive")

    @property
    def subcarrier_utilization(self) -> float:
        """Fraction of subcarriers carrying data, (N-2)/N."""
        return (self.fft_size - 2) / self.fft_size

    @property
    def power_normalization(self) -> float:
        """Time-domain unit-power factor, sqrt(N/(N-2))."""
        return math.sqrt(self.fft_size / (self.fft_size - 2))

    @property
    def snr_gap(self) -> float:
        """SNR gap of adaptive QAM at the target BER, -ln(5 BER)/1.5."""
        return -math.log(5.0 * self.target_ber) / 1.5

    @property
    def electrical_power(self) -> float:
        """Electrical signal power keeping clipping negligible, P_t^2 / 9."""
        return self.tx_power**2 / 9.0

    def noise_scale(self, responsivity: float) -> float:
        """Factor gamma = xi^2 / (R_PD^2 P_elec) weighting noise against gains."""
        return self.subcarrier_utilization**2 / (responsivity**2 * self.electrical_power)


def noma_power_coefficients(num_users: int) -> np.ndarray:
    """Amplitude coefficients a_k = sqrt((K-k+1)/sigma), sigma = K(K+1)/2.

    Users are indexed in ascending channel-gain order, so the weakest user
    (k = 1) receives the largest share; the squares sum to one exactly.
    """
    if num_users < 1:
        raise ValueError("need at least one user")
    k = np.arange(1, num_users + 1)
    sigma = num_users * (num_users + 1) / 2.0
    return np.sqrt((num_users - k + 1) / sigma)


def noma_residual_powers(num_users: int) -> np.ndarray:
    """sum_{l>k} a_l^2 for each k; the power left undecoded above user k."""
    k = np.arange(1, num_users + 1)
    return (num_users - k) * (num_users - k + 1) / (num_users * (num_users + 1))


def noma_order(gains, ue_ids=None) -> np.ndarray:
    """SIC decode order: ascending channel gain, ties by ascending UE id.

    Returns the positions (into ``gains``) ordered weakest first, so the
    last entry is the strongest user k = K_u.
    """
    gains = np.asarray(gains, dtype=float)
    ids = np.arange(len(gains)) if ue_ids is None else np.asarray(ue_ids)
    return np.lexsort((ids, gains))


def noma_sinr(
    order_index: int,
    coefficients: np.ndarray,
    h_serving: np.ndarray,
    h_interfering: np.ndarray,
    noise_var: np.ndarray,
    noise_scale: float,
    power_norm: float = 1.0,
):
    """SINR of the user at ``order_index`` (0-based, ascending-gain order).

    ``h_serving`` holds the 7 per-element gains of the serving cluster,
    ``h_interfering`` an (V, 7) stack for the active interfering clusters
    (each transmitting unit total superposed power), and ``noise_var`` the
    per-element noise variances.  MRC weights make each element's weight
    proportional to its signal amplitude over its interference-plus-noise
    power; the strongest user sees no intra-cluster term.  Returns
    (sinr, weights).
    """
    coefficients = np.asarray(coefficients, dtype=float)
    h_serving = np.asarray(h_serving, dtype=float)
    h_interfering = np.atleast_2d(np.asarray(h_interfering, dtype=float))
    if h_interfering.size == 0:
        h_interfering = np.zeros((0, h_serving.size))
    residual = float((coefficients[order_index + 1 :] ** 2).sum())
    a_k = coefficients[order_index]
    ici_elem = (h_interfering**2).sum(axis=0)
    denom_elem = residual * h_serving**2 + ici_elem + noise_scale * noise_var
    weights = power_norm * math.sqrt(noise_scale) * a_k * h_serving / denom_elem
    signal = (weights * a_k * h_serving).sum() ** 2
    if signal == 0.0:
        return 0.0, weights
    combined_serving = (weights * h_serving).sum()
    ici = ((h_interfering * weights).sum(axis=1) ** 2).sum()
    noise = noise_scale * (weights**2 * noise_var).sum()
    return float(signal / (residual * combined_serving**2 + ici + noise)), weights


def equal_allocations(num_users: int) -> tuple[np.ndarray, np.ndarray]:
    """Equal OFDMA bandwidth and power splits, b_k = p_k = 1/K."""
    if num_users < 1:
        raise ValueError("need at least one user")
    frac = np.full(num_users, 1.0 / num_users)
    return frac, frac.copy()


def validate_allocations(bandwidth_fracs, power_fracs) -> None:
    """Check that per-cluster OFDMA fractions each sum to one (1e-9 abs)."""
    for name, fracs in (("bandwidth", bandwidth_fracs), ("power", power_fracs)):
        total = float(np.sum(fracs))
        if abs(total - 1.0) > 1e-9:
            raise AllocationInvalid(f"{name} fractions sum to {total!r}, expected 1")
        if np.any(np.asarray(fracs) < 0.0):
            raise AllocationInvalid(f"negative {name} fraction")


def ofdma_sinr(
    bandwidth_frac: float,
    power_frac: float,
    h_serving: np.ndarray,
    h_interfering: np.ndarray,
    noise_var: np.ndarray,
    noise_scale: float,
    power_norm: float = 1.0,
):
    """SINR of an OFDMA user holding fractions (b_k, p_k) of its cluster.

    Intra-cluster interference is absent by construction; each active
    interfering cluster contributes at unit aggregate power.  The noise
    term scales with b_k since the user only occupies that band fraction.
    Returns (sinr, weights).
    """
    h_serving = np.asarray(h_serving, dtype=float)
    h_interfering = np.atleast_2d(np.asarray(h_interfering, dtype=float))
    if h_interfering.size == 0:
        h_interfering = np.zeros((0, h_serving.size))
    ici_elem = (h_interfering**2).sum(axis=0)
    denom_elem = ici_elem + noise_scale * bandwidth_frac * noise_var
    weights = (
        power_norm * math.sqrt(noise_scale * power_frac) * h_serving / denom_elem
    )
    signal = power_frac * (weights * h_serving).sum() ** 2
    if signal == 0.0:
        return 0.0, weights
    ici = ((h_interfering * weights).sum(axis=1) ** 2).sum()
    noise = noise_scale * bandwidth_frac * (weights**2 * noise_var).sum()
    return float(signal / (ici + noise)), weights


def user_rate(sinr: float, mac: MacConfig, bandwidth_frac: float | None = None) -> float:
    """Achievable rate [bit/s]: xi B log2(1 + SINR/Gamma), times b_k for OFDMA."""
    if sinr < 0.0:
        raise ValueError("SINR must be nonnegative")
    rate = (
        mac.subcarrier_utilization
        * mac.bandwidth
        * math.log2(1.0 + sinr / mac.snr_gap)
    )
    if mac.scheme == "ofdma":
        if bandwidth_frac is None:
            raise ValueError("OFDMA rate needs the user's bandwidth fraction")
        rate *= bandwidth_frac
    return rate


@dataclass(frozen=True)
class NetworkMetrics:
    """Per-drop network summary: sum rate and Jain fairness."""

    sum_rate: float
    jain: float
    degenerate: bool = False  # every rate was zero; jain reported as 0


def network_metrics(rates) -> NetworkMetrics:
    """Sum rate and Jain index J = (sum r)^2 / (K sum r^2) of a rate vector."""
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        raise ValueError("need at least one user rate")
    total = float(rates.sum())
    square_sum = float((rates**2).sum())
    if square_sum == 0.0:
        return NetworkMetrics(sum_rate=0.0, jain=0.0, degenerate=True)
    return NetworkMetrics(
        sum_rate=total, jain=total**2 / (rates.size * square_sum)
    )
