from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from dynamics.transport import E_INIT_PRESETS
from hopf.background import DATUM_PRESETS
from mollifiers.kernels import MOLLIFIER_PRESETS
from utils.fluxes import FLUX_PRESETS

MODE_REGION = {"A": "ahead", "C": "ahead", "B": "behind", "D": "behind"}


class FluxSpec(BaseModel):
    preset: str | None = Field(default="u2", description="Named flux: u2, u3 or u2_u3")
    coefficients: list[float] | None = Field(default=None, description="Ascending polynomial coefficients; overrides preset")
    beta: float = Field(default=0.1, description="Cubic weight of the u2_u3 preset")

    @field_validator("preset")
    def check_preset(cls, v):
        if v is not None and v not in FLUX_PRESETS:
            raise ValueError(f"flux preset must be one of {', '.join(FLUX_PRESETS)}")
        return v

    @field_validator("coefficients")
    def check_coefficients(cls, v):
        if v is not None and not v:
            raise ValueError("flux coefficients must not be empty")
        return v


class BackgroundSpec(BaseModel):
    preset: str = Field(default="constant", description="Initial datum: constant, tanh, gaussian or linear")
    params: dict[str, float] = Field(default_factory=dict, description="Datum parameters, e.g. a, b, k for tanh")

    @field_validator("preset")
    def check_preset(cls, v):
        if v not in DATUM_PRESETS:
            raise ValueError(f"background preset must be one of {', '.join(DATUM_PRESETS)}")
        return v


class KernelSpec(BaseModel):
    name: str = Field(default="kdv_sech2", description="Profile kernel of modes A/B and the moments table")
    width: float = Field(default=1.0, gt=0, description="Kernel width")
    heaviside: str = Field(default="sech2", description="Unit-mass kernel whose primitive approximates theta")
    closure: Literal["kdv", "constant"] = Field(default="kdv", description="alpha(g) closure of mode A")
    alpha0: float | None = Field(default=None, gt=0, description="alpha of the constant closure")

    @field_validator("name", "heaviside")
    def check_name(cls, v):
        if v not in MOLLIFIER_PRESETS:
            raise ValueError(f"kernel must be one of {', '.join(MOLLIFIER_PRESETS)}")
        return v

    @model_validator(mode="after")
    def check_closure(self):
        if self.closure == "constant" and self.alpha0 is None:
            raise ValueError("the constant closure needs alpha0")
        if self.heaviside == "kdv_sech2":
            raise ValueError("the Heaviside kernel must have unit mass; kdv_sech2 does not")
        return self


class EInitSpec(BaseModel):
    kind: str = Field(default="zero", description="zero, constant or gaussian")
    amplitude: float = Field(default=0.0, description="Value (constant) or peak (gaussian)")
    center: float = Field(default=0.0, description="Center of the gaussian bump")
    width: float = Field(default=1.0, gt=0, description="Width of the gaussian bump")

    @field_validator("kind")
    def check_kind(cls, v):
        if v not in E_INIT_PRESETS:
            raise ValueError(f"e_init kind must be one of {', '.join(E_INIT_PRESETS)}")
        return v


class DirectSpec(BaseModel):
    eps: float = Field(default=0.05, gt=0, description="Dispersion scale of the direct KdV run")
    length: float = Field(default=40.0, gt=0, description="Periodic box length")
    n_out: int = Field(default=21, ge=2, description="Number of output times")
    cfl: float = Field(default=0.25, gt=0, le=1.0, description="Advective CFL number")
    check_domain: bool = Field(default=True, description="Repeat on a doubled box and record the difference")


class CounterexampleSpec(BaseModel):
    kernels: list[str] = Field(default_factory=lambda: ["sech2"], description="Unit-mass kernels to tabulate")
    eps: float = Field(default=0.01, gt=0, description="Initial mass of the counterexample")
    t0: float = Field(default=1.0, gt=0, description="Comparison time")

    @field_validator("kernels")
    def check_kernels(cls, v):
        bad = [k for k in v if k not in MOLLIFIER_PRESETS]
        if bad or not v:
            raise ValueError(f"kernels must be a non-empty subset of {', '.join(MOLLIFIER_PRESETS)}")
        return v


class NonuniquenessSpec(BaseModel):
    kappas: tuple[float, float] = Field(default=(0.0, 0.5), description="Rates of the histories g0 (1 + kappa t)")
    n_points: int = Field(default=41, ge=3, description="Wedge sample size")


class ProfileQuery(BaseModel):
    u0: float = Field(default=0.0, description="Background value at the soliton center")
    amplitude: float | None = Field(default=None, gt=0, description="Amplitude; sets the speed")
    speed: float | None = Field(default=None, description="Speed c; used when amplitude is not given")
    tau_max: float = Field(default=10.0, gt=0, description="Half-width of the tabulated tau range")
    n_tau: int = Field(default=401, ge=3, description="Number of tabulated tau points")

    @model_validator(mode="after")
    def check_target(self):
        if self.amplitude is None and self.speed is None:
            raise ValueError("profile query needs an amplitude or a speed")
        return self


class OutputSpec(BaseModel):
    out_dir: str | None = Field(default=None, description="Directory for tables and plots")
    plots: bool = Field(default=False, description="Write SVG plots beside the tables")
    threads: int | None = Field(default=None, ge=1, description="Workers for eps sweeps")


class Scenario(BaseModel):
    name: str = Field(default="scenario", description="Label used in logs")
    flux: FluxSpec = Field(default_factory=FluxSpec, description="Flux f")
    background: BackgroundSpec = Field(default_factory=BackgroundSpec, description="Hopf background datum")
    kernel: KernelSpec = Field(default_factory=KernelSpec, description="Profile and Heaviside kernels")
    mode: Literal["A", "B", "C", "D"] = Field(default="B", description="Soliton dynamics system")
    region: Literal["ahead", "behind"] | None = Field(default=None, description="Corrective-field side; implied by mode")
    g0: float = Field(default=1.0, description="Initial amplitude")
    phi0: float = Field(default=0.0, description="Initial soliton position")
    e_init: EInitSpec = Field(default_factory=EInitSpec, description="Initial corrective field")
    t_end: float = Field(default=1.0, description="Final time; must precede breaking")
    n_steps: int = Field(default=200, description="Fixed RK4 steps")
    strict_compat: bool = Field(default=False, description="Raise on mode-B/D corner incompatibility")
    eps_list: list[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025, 0.0125], description="eps sweep")
    operator: Literal["hopf", "kdv"] | None = Field(default=None, description="Residual operator; kdv for B/D, hopf for A/C")
    profile: ProfileQuery = Field(default_factory=lambda: ProfileQuery(amplitude=1.0), description="profile subcommand")
    direct: DirectSpec = Field(default_factory=DirectSpec, description="compare-direct settings")
    counterexample: CounterexampleSpec = Field(default_factory=CounterexampleSpec, description="counterexample settings")
    nonuniqueness: NonuniquenessSpec = Field(default_factory=NonuniquenessSpec, description="nonuniqueness settings")
    output: OutputSpec = Field(default_factory=OutputSpec, description="Output settings")
    seed: int = Field(default=0, description="RNG seed; the test bank is fixed, so it only enters the digest")

    @field_validator("g0")
    def check_g0(cls, v):
        if v <= 0:
            raise ValueError("g0 must be positive")
        return v

    @field_validator("t_end")
    def check_t_end(cls, v):
        if v <= 0:
            raise ValueError("t_end must be positive")
        return v

    @field_validator("n_steps")
    def check_n_steps(cls, v):
        if v < 4:
            raise ValueError("n_steps must be at least 4")
        return v

    @field_validator("eps_list")
    def check_eps_list(cls, v):
        if not v:
            raise ValueError("eps list is empty")
        if any(e <= 0 for e in v):
            raise ValueError("eps values must be positive")
        return v

    @model_validator(mode="after")
    def check_region(self):
        expected = MODE_REGION[self.mode]
        if self.region is not None and self.region != expected:
            raise ValueError(f"mode {self.mode} puts the corrective field {expected} of the soliton, not {self.region}")
        return self

    @property
    def resolved_region(self) -> str:
        return MODE_REGION[self.mode]

    @property
    def resolved_operator(self) -> str:
        return self.operator or ("kdv" if self.mode in ("B", "D") else "hopf")
