"""Two-agent endowment economy with alternating endowments and CRRA utility.

Only the reduced form is modelled: aggregate wealth is the rich agent's
income a G^t and s(R) is the rich agent's saving per unit of that income.
"""
from __future__ import annotations

from dataclasses import dataclass

from bubbly.errors import InvalidParameters
from bubbly.reduced_form import ReducedFormEconomy


@dataclass(frozen=True)
class KocherlakotaParams:
    a: float
    b: float
    beta: float
    gamma: float
    G: float

    def __post_init__(self):
        if not self.a > self.b > 0:
            raise InvalidParameters("need a > b > 0")
        if not 0 < self.beta < 1:
            raise InvalidParameters("beta must lie in (0, 1)")
        if not (self.gamma > 0 and self.G > 0):
            raise InvalidParameters("gamma and G must be positive")
        if not self.beta * self.G ** (1.0 - self.gamma) < 1:
            raise InvalidParameters(
                f"beta G^(1-gamma) = {self.beta * self.G ** (1 - self.gamma):.6g} must be < 1 "
                "for individual optimality")

    @property
    def fundamental_rate(self) -> float:
        return ((self.b / self.a) * self.G) ** self.gamma / self.beta

    @property
    def low_interest(self) -> bool:
        """b < (beta G^(1-gamma))^(1/gamma) a."""
        return self.b < (self.beta * self.G ** (1.0 - self.gamma)) ** (1.0 / self.gamma) * self.a

    @property
    def bubbly_price_coefficient(self) -> float:
        """P_t / G^t in the bubbly equilibrium."""
        x = (self.beta * self.G ** (1.0 - self.gamma)) ** (1.0 / self.gamma)
        return (x * self.a - self.b) / (1.0 + x)


def kocherlakota_saving_rate(params: KocherlakotaParams, R):
    if not R > 0:
        raise InvalidParameters("R must be positive")
    x = (params.beta * R) ** (1.0 / params.gamma)
    return (x - params.b / params.a * params.G) / (R + x)


def kocherlakota_reduced_form(params: KocherlakotaParams) -> ReducedFormEconomy:
    return ReducedFormEconomy(
        growth=lambda R: params.G,
        saving=lambda R: kocherlakota_saving_rate(params, R),
        name="kocherlakota",
        fundamental_bracket=(1e-8, 1e4),
        bubbly_upper=max(10.0, 2.0 * params.G),
        wealth0=params.a,
    )
