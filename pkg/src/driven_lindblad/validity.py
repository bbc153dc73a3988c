"""Regime conditions for the time-dependent master equation.

Every "much greater than" is read as a factor of :data:`MARGIN`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .bath import BathSpec, QuadratureConfig, markov_constant
from .qubit import DriveParams

MARGIN = 100.0
WEAK_COUPLING_MAX = 1e-2


@dataclass(frozen=True)
class DrivingCheck:
    ratio: float
    bound: float
    driving_ok: bool
    adiabatic_ok: bool


@dataclass(frozen=True)
class ValidityReport:
    """All regime checks for one parameter set.

    ``markov_C`` is in units of ``omega0``; ``secular_margin`` is
    ``2 omega0 / (a^2 C)``; ``driving_ratio`` is ``Omega omega / (4 omega0^2)``.
    """

    a: float
    weak_coupling_ok: bool
    markov_C: float
    markov_converged: bool
    secular_margin: float
    secular_ok: bool
    driving_ratio: float
    driving_bound: float
    driving_ok: bool
    adiabatic_ok: bool

    @property
    def all_ok(self) -> bool:
        """Conditions for the time-dependent equation; adiabaticity is
        informational only."""
        return (self.weak_coupling_ok and self.markov_converged
                and self.secular_ok and self.driving_ok)

    def as_lines(self) -> list:
        out = [f"{k} = {_fmt(v)}" for k, v in asdict(self).items()]
        out.append(f"all_ok = {_fmt(self.all_ok)}")
        return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12e}"
    return str(v)


def check_secular(p: DriveParams, b: BathSpec, C: float):
    """Secular margin ``min Bohr-frequency difference / (a^2 C)``.

    The smallest difference between the Bohr frequencies ``{0, +-2E}`` is
    ``2E >= 2 omega0``. Returns ``(margin, ok)``.
    """
    if not C > 0:
        raise ValueError("Markov constant must be positive")
    margin = 2.0 * p.omega0 / (b.a ** 2 * C)
    return margin, margin > MARGIN


def check_driving(p: DriveParams, a: float) -> DrivingCheck:
    ratio = p.lambda_Omega * p.lambda_omega / 4.0
    bound = a ** -2
    return DrivingCheck(ratio=ratio, bound=bound, driving_ok=ratio < bound / MARGIN,
                        adiabatic_ok=ratio < 1.0 / MARGIN)


def full_report(p: DriveParams, b: BathSpec,
                quad: QuadratureConfig = QuadratureConfig()) -> ValidityReport:
    mc = markov_constant(b, quad=quad)
    margin, secular_ok = check_secular(p, b, mc.C)
    drv = check_driving(p, b.a)
    return ValidityReport(
        a=b.a, weak_coupling_ok=b.a <= WEAK_COUPLING_MAX, markov_C=mc.C / p.omega0,
        markov_converged=mc.converged, secular_margin=margin, secular_ok=secular_ok,
        driving_ratio=drv.ratio, driving_bound=drv.bound, driving_ok=drv.driving_ok,
        adiabatic_ok=drv.adiabatic_ok)
