"""Pre-FEC BER of the coherent transponders as a function of OSNR.

SNR per symbol is derived from OSNR (12.5 GHz reference bandwidth), reduced
by a flat implementation penalty, and fed to Gray-coded AWGN bit-error
approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .linkbudget import REFERENCE_BANDWIDTH_GHZ
from .plan import CUT_SYMBOL_RATE_GBD, SP_QPSK_SYMBOL_RATE_GBD, ModulationFormat

FEC_LIMIT_RANGE = (2e-2, 3e-2)
DEFAULT_FEC_LIMIT = 2.5e-2

# Makes DP-16QAM at 34.475 GBd hit BER 2.5e-2 at 19.0 dB OSNR.
DEFAULT_PENALTY_DB = 5.347075
# QPSK: puts the dual-CUT QPSK channel (20.74 dB mean OSNR) just above the
# 1e-8 counting floor, so only upfaded intervals count zero errors.
QPSK_PENALTY_DB = 3.5

DEFAULT_PENALTIES = {
    ModulationFormat.DP16QAM: DEFAULT_PENALTY_DB,
    ModulationFormat.DP8QAM: 4.4,  # uncalibrated, between QPSK and 16QAM
    ModulationFormat.DPQPSK: QPSK_PENALTY_DB,
    ModulationFormat.SPQPSK: QPSK_PENALTY_DB,
}

_OSNR_SEARCH_DB = (-40.0, 80.0)


@dataclass(frozen=True)
class ModemModel:
    format: ModulationFormat
    symbol_rate: float = CUT_SYMBOL_RATE_GBD  # GBd
    impl_penalty: float = DEFAULT_PENALTY_DB  # dB; use for_format() for per-format defaults
    fec_limit: float = DEFAULT_FEC_LIMIT

    def __post_init__(self):
        if not self.impl_penalty >= 0:
            raise ValueError("implementation penalty must be non-negative")
        lo, hi = FEC_LIMIT_RANGE
        if not lo <= self.fec_limit <= hi:
            raise ValueError(f"fec_limit must lie in [{lo}, {hi}], got {self.fec_limit}")
        if not self.symbol_rate > 0:
            raise ValueError("symbol rate must be positive")

    @classmethod
    def for_format(cls, fmt: ModulationFormat, symbol_rate: float | None = None, **kwargs) -> "ModemModel":
        if symbol_rate is None:
            symbol_rate = SP_QPSK_SYMBOL_RATE_GBD if fmt is ModulationFormat.SPQPSK else CUT_SYMBOL_RATE_GBD
        kwargs.setdefault("impl_penalty", DEFAULT_PENALTIES[fmt])
        return cls(fmt, symbol_rate, **kwargs)

    @property
    def osnr_to_snr_db(self) -> float:
        """dB offset from OSNR (12.5 GHz) to effective SNR per symbol, penalty included."""
        p = self.format.polarizations
        return 10.0 * math.log10(p * REFERENCE_BANDWIDTH_GHZ / self.symbol_rate) - self.impl_penalty


def awgn_ber(fmt: ModulationFormat, snr_db):
    """Gray-coded bit-error probability at per-symbol SNR ``snr_db``.

    QPSK: exact per-quadrature result. 16QAM: nearest-neighbour
    approximation of square 16QAM. 8QAM: rectangular 4x2 constellation
    (one 4-PAM and one 2-PAM rail, Es = 6 for unit half-spacing), giving
    (5/12) erfc(sqrt(SNR/6)); the transponders' actual 8QAM constellation is
    unknown, so this curve is uncalibrated.
    """
    snr = np.power(10.0, np.asarray(snr_db, dtype=float) / 10.0)
    if fmt in (ModulationFormat.DPQPSK, ModulationFormat.SPQPSK):
        ber = 0.5 * erfc(np.sqrt(snr / 2.0))
    elif fmt is ModulationFormat.DP16QAM:
        ber = 0.375 * erfc(np.sqrt(snr / 10.0))
    elif fmt is ModulationFormat.DP8QAM:
        ber = (5.0 / 12.0) * erfc(np.sqrt(snr / 6.0))
    else:  # pragma: no cover
        raise ValueError(f"no BER model for {fmt}")
    return ber if ber.ndim else float(ber)


def ber_from_osnr(model: ModemModel, osnr):
    """Pre-FEC BER at ``osnr`` dB (scalar or array)."""
    osnr = np.asarray(osnr, dtype=float)
    if not np.all(np.isfinite(osnr)):
        raise ValueError("OSNR must be finite")
    return awgn_ber(model.format, osnr + model.osnr_to_snr_db)


def required_osnr(model: ModemModel, target_ber: float) -> float:
    """OSNR (dB) at which the BER curve crosses ``target_ber``."""
    if not 0 < target_ber < 0.5:
        raise ValueError(f"target BER must lie in (0, 0.5), got {target_ber}")
    lo, hi = _OSNR_SEARCH_DB
    f_lo = ber_from_osnr(model, lo) - target_ber
    f_hi = ber_from_osnr(model, hi) - target_ber
    if f_lo <= 0 or f_hi >= 0:
        raise ValueError(f"BER {target_ber} is not reachable for {model.format} within {lo}..{hi} dB OSNR")
    return brentq(lambda x: ber_from_osnr(model, x) - target_ber, lo, hi, xtol=1e-10, rtol=1e-14)


def margin(model: ModemModel, mean_osnr: float) -> float:
    """OSNR headroom (dB) above the FEC-limit crossing."""
    return mean_osnr - required_osnr(model, model.fec_limit)


def ber_curve(model: ModemModel, osnr_min: float, osnr_max: float, step: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """BER sampled on an OSNR grid (inclusive of both ends)."""
    if osnr_max < osnr_min:
        raise ValueError("osnr_max must not be below osnr_min")
    n = int(round((osnr_max - osnr_min) / step))
    osnr = np.round(osnr_min + step * np.arange(n + 1), 10)
    return osnr, ber_from_osnr(model, osnr)
