"""Per-UE wideband channel: AR(1) jitter around a mean CQI.

The simulator has no propagation model, so RSRP, RSSI, RSRQ and SNR are
synthesized as affine functions of the realized CQI plus seeded noise. They
exist so that policies and selectors reading them have something plausible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CQI_MIN, CQI_MAX = 1, 15


@dataclass(frozen=True)
class ChannelModel:
    jitter_std: float = 0.5
    ar_coef: float = 0.95
    period_slots: int = 20

    def __post_init__(self):
        if self.jitter_std < 0 or not 0 <= self.ar_coef < 1 or self.period_slots < 1:
            raise ValueError("channel needs jitter_std >= 0, ar_coef in [0, 1), period_slots >= 1")


@dataclass
class ChannelTrace:
    """One row per channel update, one column per UE."""

    cqi: np.ndarray
    rsrp: np.ndarray
    rssi: np.ndarray
    rsrq: np.ndarray
    snr_x10: np.ndarray
    mcs: np.ndarray
    period_slots: int


def cqi_to_mcs(cqi: np.ndarray, max_mcs: int = 27) -> np.ndarray:
    return np.minimum(max_mcs, np.round(np.asarray(cqi) * max_mcs / CQI_MAX)).astype(int)


def generate_channel(mean_cqi, model: ChannelModel, n_slots: int, rng: np.random.Generator,
                     max_mcs: int = 27) -> ChannelTrace:
    mean = np.asarray(mean_cqi, dtype=float)
    n_ue = mean.size
    n_upd = max(1, -(-n_slots // model.period_slots))
    x = np.zeros((n_upd, n_ue))
    if model.jitter_std > 0:
        rho = model.ar_coef
        noise = rng.standard_normal((n_upd, n_ue)) * model.jitter_std * np.sqrt(1 - rho * rho)
        x[0] = rng.standard_normal(n_ue) * model.jitter_std
        for k in range(1, n_upd):
            x[k] = rho * x[k - 1] + noise[k]
    cqi = np.clip(np.round(mean + x), CQI_MIN, CQI_MAX).astype(int)
    fine = mean + x
    rsrp = np.round(-125.0 + 3.0 * fine + rng.normal(0, 1.0, fine.shape)).astype(int)
    rssi = np.round(-95.0 + 2.0 * fine + rng.normal(0, 1.0, fine.shape)).astype(int)
    rsrq = np.round(-20.0 + 0.8 * fine + rng.normal(0, 0.5, fine.shape), 1)
    snr_x10 = np.round((2.0 * fine - 6.0 + rng.normal(0, 0.5, fine.shape)) * 10).astype(int)
    return ChannelTrace(cqi, rsrp, rssi, rsrq, snr_x10, cqi_to_mcs(cqi, max_mcs), model.period_slots)
