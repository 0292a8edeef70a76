"""Closed-form precision theory for transmission estimation.

Symbol conventions used throughout:

* ``eta``        sample transmission.
* ``eta_setup``  idler-arm efficiency without the sample (source times detector).
* ``eta_i_total`` full Klyshko efficiency of the idler arm, ``eta * eta_setup``.
* ``eta_s``      heralding fidelity, the heralded share of photons hitting the
  sample (``1 - eta_s`` is switch leakage).

Precisions are inverse variances. Singular limits are reported through
:class:`PrecisionValue.divergent` or :class:`SingularityError`, never as
``inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import CurvePoint


class SingularityError(ZeroDivisionError):
    """The model is singular at the requested point (e.g. zero transmission)."""


@dataclass(frozen=True)
class PrecisionValue:
    value: float
    divergent: bool = False

    def __post_init__(self):
        if not self.divergent and not self.value >= 0:
            raise ValueError("precision must be >= 0")

    @classmethod
    def diverging(cls):
        return cls(math.nan, True)


@dataclass(frozen=True)
class MixtureState:
    """Vacuum / single-photon mixture left after loss acts on a single photon."""

    p0: float
    p1: float

    def __post_init__(self):
        if not (0.0 <= self.p0 <= 1.0 and 0.0 <= self.p1 <= 1.0):
            raise ValueError("probabilities must lie in [0,1]")
        if self.p0 + self.p1 != 1.0:
            raise ValueError("p0 + p1 must equal 1")

    @property
    def mean_photon_number(self):
        return self.p1

    @property
    def fano_factor(self):
        # variance/mean of a Bernoulli(p1) photon number
        return self.p0


def _check_unit(x, name):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name}={x} out of [0,1]")


def _check_probe(n_in, nu):
    if not n_in > 0:
        raise ValueError("n_in must be > 0")
    if not nu >= 1:
        raise ValueError("nu must be >= 1")


def shot_noise_precision(eta: float, n_in: float = 1.0, nu: float = 1.0) -> PrecisionValue:
    """Coherent-state (shot-noise-limited) precision ``nu * n_in / eta``."""
    _check_unit(eta, "eta")
    _check_probe(n_in, nu)
    if eta == 0:
        raise SingularityError("shot-noise precision is singular at eta=0")
    return PrecisionValue(nu * n_in / eta)


def fock_precision(eta: float, n_in: int = 1, nu: float = 1.0) -> PrecisionValue:
    """Fock-state precision ``nu * N / (eta (1 - eta))``; divergent at eta=1."""
    _check_unit(eta, "eta")
    if int(n_in) != n_in or n_in < 1:
        raise ValueError("n_in must be a positive integer photon number")
    _check_probe(n_in, nu)
    if eta == 0:
        raise SingularityError("Fock precision is singular at eta=0")
    if eta == 1:
        return PrecisionValue.diverging()
    return PrecisionValue(nu * n_in / (eta * (1.0 - eta)))


def binomial_pmf(n_out: int, n_in: int, eta: float) -> float:
    """Probability of ``n_out`` photons surviving a channel of transmission ``eta``.

    Evaluated in log space so ``n_in`` up to ~1e6 stays finite.
    """
    if int(n_out) != n_out or int(n_in) != n_in:
        raise ValueError("photon numbers must be integers")
    n_out, n_in = int(n_out), int(n_in)
    if n_in < 0 or n_out < 0 or n_out > n_in:
        raise ValueError(f"need 0 <= n_out <= n_in, got n_out={n_out}, n_in={n_in}")
    _check_unit(eta, "eta")
    n_lost = n_in - n_out
    # endpoints handled exactly to avoid log(0)
    if eta == 0.0:
        return 1.0 if n_out == 0 else 0.0
    if eta == 1.0:
        return 1.0 if n_lost == 0 else 0.0
    log_p = (math.lgamma(n_in + 1) - math.lgamma(n_out + 1) - math.lgamma(n_lost + 1)
             + n_out * math.log(eta) + n_lost * math.log1p(-eta))
    return math.exp(log_p)


def lossy_fock_state(eta_i: float) -> MixtureState:
    _check_unit(eta_i, "eta_i")
    return MixtureState(p0=1.0 - eta_i, p1=eta_i)


def degraded_precision(eta: float, eta_setup: float, eta_s: float) -> PrecisionValue:
    """Per-photon precision of a lossy, leaky heralded probe: ``eta_s / (eta (1 - eta eta_setup))``."""
    _check_unit(eta, "eta")
    _check_unit(eta_setup, "eta_setup")
    _check_unit(eta_s, "eta_s")
    if eta == 0:
        raise SingularityError("degraded precision is singular at eta=0")
    if eta * eta_setup == 1.0:
        return PrecisionValue.diverging()
    return PrecisionValue(eta_s / (eta * (1.0 - eta * eta_setup)))


def advantage_ratio(eta: float, eta_setup: float, eta_s: float) -> float:
    """Precision relative to the coherent baseline, ``eta_s / (1 - eta eta_setup)``.

    Values above one mean sub-shot-noise performance.
    """
    _check_unit(eta, "eta")
    _check_unit(eta_setup, "eta_setup")
    _check_unit(eta_s, "eta_s")
    denom = 1.0 - eta * eta_setup
    if denom == 0.0:
        raise SingularityError("advantage ratio is singular when eta * eta_setup = 1")
    return eta_s / denom


def jakeman_condition(eta_i_total: float, eta_s: float) -> bool:
    """True iff the heralded probe can beat the coherent state: ``eta_I + eta_S > 1``."""
    _check_unit(eta_i_total, "eta_i_total")
    _check_unit(eta_s, "eta_s")
    return eta_i_total + eta_s > 1.0


def sweep_advantage_curve(eta_grid, eta_setup: float, eta_s: float) -> list:
    """One :class:`CurvePoint` per transmission; ``eta_setup = eta_s = 1`` gives the ideal Fock curve."""
    return [CurvePoint(eta=float(eta), r_analytic=advantage_ratio(float(eta), eta_setup, eta_s))
            for eta in eta_grid]


# Reference curves of the theory figure: (label, eta_setup, eta_s).
FIGURE_CURVES = (
    ("r_ideal", 1.0, 1.0),
    ("r_case1", 0.4, 1.0),
    ("r_case2", 0.6, 1.0),
    ("r_case3", 0.4, 0.6),
    ("r_case4", 0.6, 0.4),
)
