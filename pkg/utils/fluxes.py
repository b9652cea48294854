from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

FLUX_PRESETS = ("u2", "u3", "u2_u3")


class FluxModel:
    def __init__(self, preset: str | None = "u2", coefficients: Sequence[float] | None = None, beta: float = 0.1):
        """
        Initialize a polynomial flux f(u)

        Args:
            preset: Either 'u2', 'u3' or 'u2_u3' (f = u^2 + beta*u^3); ignored when
                coefficients are given
            coefficients: Ascending polynomial coefficients [c0, c1, c2, ...]
            beta: Cubic weight of the 'u2_u3' preset
        """
        if coefficients is not None:
            coef = [float(c) for c in coefficients]
            if not coef:
                raise ValueError("Flux coefficients are empty.")
            self.name = "poly[" + ",".join(f"{c:g}" for c in coef) + "]"
        elif preset == "u2":
            coef = [0.0, 0.0, 1.0]
            self.name = "u2"
        elif preset == "u3":
            coef = [0.0, 0.0, 0.0, 1.0]
            self.name = "u3"
        elif preset == "u2_u3":
            coef = [0.0, 0.0, 1.0, float(beta)]
            self.name = f"u2+{beta:g}u3"
        else:
            raise ValueError(f"Unsupported flux preset: {preset}. Choose one of {', '.join(FLUX_PRESETS)}.")

        self.model = Polynomial(coef).trim()
        self._d1 = self.model.deriv(1)
        self._d2 = self.model.deriv(2)
        self._d3 = self.model.deriv(3)
        # F(0) = 0
        self._primitive = self.model.integ(1)
        u = Polynomial([0.0, 1.0])
        self._tilde = 2.0 * u * self.model - 2.0 * self._primitive

    @property
    def coefficients(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.model.coef)

    @property
    def is_burgers(self) -> bool:
        """True for f(u) = u^2, the flux of the Hopf/KdV systems."""
        coef = self.coefficients
        return len(coef) == 3 and coef[0] == 0.0 and coef[1] == 0.0 and coef[2] == 1.0

    def __call__(self, u):
        return self.model(u)

    def prime(self, u):
        return self._d1(u)

    def second(self, u):
        return self._d2(u)

    def third(self, u):
        return self._d3(u)

    def primitive(self, u):
        return self._primitive(u)

    def tilde(self, u):
        """f~(u) = 2u f(u) - 2 F(u): flux of the u^2 conservation law."""
        return self._tilde(u)

    def tilde1(self, u):
        return self._primitive(u)

    def tilde_model(self) -> "FluxModel":
        """f~ as a flux of its own, for the u^2 conservation law."""
        return FluxModel(coefficients=self._tilde.coef)

    def is_convex_on(self, low: float, high: float, samples: int = 257) -> bool:
        grid = np.linspace(low, high, samples)
        return bool(np.all(self._d2(grid) > 0.0))

    def __eq__(self, other) -> bool:
        return isinstance(other, FluxModel) and self.coefficients == other.coefficients

    def __hash__(self) -> int:
        return hash(self.coefficients)

    def __repr__(self) -> str:
        return f"FluxModel({self.name})"
