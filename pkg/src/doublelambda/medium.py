"""
Linear response of a closed-loop double-Lambda EIT medium.

The weak probe and signal modes propagate through the medium as a two-mode
linear system ``d/dz a^dag = -M a^dag + noise``.  At steady state (zero
frequency) the output creation operators are ``exp(-M L)`` applied to the
input ones, with elements (A, B, C, D).  Rates are in units of the excited
state decay rate Gamma, lengths in units of the medium length L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import NDArray


class DomainError(ValueError):
    """Raised when an input lies outside the physical domain of an operation."""


@dataclass(frozen=True)
class MediumParams:
    od: float
    delta: float = 0.0
    gamma: float = 1.0
    phi_c: float = 0.0
    phi_d: float = 0.0
    length: float = 1.0

    def __post_init__(self) -> None:
        for name in ("od", "delta", "gamma", "phi_c", "phi_d", "length"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if self.od < 0:
            raise DomainError(f"od must be >= 0, got {self.od}")
        if self.gamma <= 0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")
        if self.length <= 0:
            raise DomainError(f"length must be > 0, got {self.length}")

    @property
    def loop_phase(self) -> float:
        """phi_c - phi_d."""
        return self.phi_c - self.phi_d

    @property
    def loss_exponent(self) -> float:
        """r = od Gamma^2 / (2 (Gamma^2 + Delta^2)); the lossy mode decays as exp(-r)."""
        g2 = self.gamma * self.gamma
        return self.od * g2 / (2.0 * (g2 + self.delta * self.delta))

    def replace(self, **changes: float) -> "MediumParams":
        values = {
            "od": self.od,
            "delta": self.delta,
            "gamma": self.gamma,
            "phi_c": self.phi_c,
            "phi_d": self.phi_d,
            "length": self.length,
        }
        values.update(changes)
        return MediumParams(**values)


@dataclass(frozen=True)
class TransferMatrix:
    a: complex
    b: complex
    c: complex
    d: complex
    phi_c: float = 0.0
    phi_d: float = 0.0

    @property
    def loop_phase(self) -> float:
        return self.phi_c - self.phi_d

    def as_array(self) -> NDArray[np.complex128]:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def mode_map(self) -> NDArray[np.complex128]:
        """Heisenberg map of annihilation operators: a_out = conj(T) a_in."""
        return np.conj(self.as_array())

    def probe_loss(self) -> float:
        return 1.0 - abs(self.a) ** 2 - abs(self.b) ** 2

    def signal_loss(self) -> float:
        return 1.0 - abs(self.c) ** 2 - abs(self.d) ** 2


@dataclass(frozen=True)
class PropagationCoefficients:
    lambda_p: complex
    lambda_s: complex
    kappa_p: complex
    kappa_s: complex
    phi_c: float = 0.0
    phi_d: float = 0.0

    def matrix(self) -> NDArray[np.complex128]:
        """The coupling matrix M of the propagation equation (per unit length)."""
        theta = self.phi_c - self.phi_d
        return np.array(
            [
                [self.lambda_p, self.kappa_p * np.exp(-1j * theta)],
                [self.kappa_s * np.exp(1j * theta), self.lambda_s],
            ],
            dtype=complex,
        )


@dataclass(frozen=True)
class PopulationSet:
    sigma11: float = 1.0
    sigma33: float = 0.0
    sigma44: float = 0.0

    def __post_init__(self) -> None:
        for name in ("sigma11", "sigma33", "sigma44"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise DomainError(f"population {name} must lie in [0, 1], got {value}")


TRANSITIONS = (21, 31, 41)


@dataclass(frozen=True)
class NoiseModel:
    rabi: float
    zeta_p: dict[int, complex]
    zeta_s: dict[int, complex]
    d_normal: NDArray[np.float64] = field(repr=False)
    d_antinormal: NDArray[np.float64] = field(repr=False)
    populations: PopulationSet = PopulationSet()

    def noise_vector(self, transition: int) -> NDArray[np.complex128]:
        """(zeta^p_jk, zeta^s_jk) as a column feeding the propagation equation."""
        return np.array([self.zeta_p[transition], self.zeta_s[transition]], dtype=complex)


@dataclass(frozen=True)
class LossIdentityReport:
    lhs_probe: float
    lhs_signal: float
    rhs_probe: float
    rhs_signal: float
    closed_form: float
    residuals: dict[str, float]
    panels: int
    converged: bool

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


def _coupling(params: MediumParams) -> complex:
    # alpha Gamma / 4L, the optical-depth form of g^2 N / c
    return params.od * params.gamma / (4.0 * params.length)


def transfer_matrix(params: MediumParams) -> TransferMatrix:
    """Closed-form elements of exp(-M L)."""
    g = params.gamma
    exponent = 1j * params.od * g / (2.0 * (params.delta - 1j * g))
    e = np.exp(exponent)
    phase = np.exp(1j * params.loop_phase)
    same = 0.5 * (1.0 + e)
    cross = 0.5 * (1.0 - e)
    return TransferMatrix(
        a=complex(same),
        b=complex(cross / phase),
        c=complex(cross * phase),
        d=complex(same),
        phi_c=params.phi_c,
        phi_d=params.phi_d,
    )


def propagation_coefficients(params: MediumParams) -> PropagationCoefficients:
    lam = _coupling(params) / (params.gamma + 1j * params.delta)
    return PropagationCoefficients(
        lambda_p=lam,
        lambda_s=lam,
        kappa_p=-lam,
        kappa_s=-lam,
        phi_c=params.phi_c,
        phi_d=params.phi_d,
    )


def propagator(params: MediumParams, distances: NDArray[np.float64]) -> NDArray[np.complex128]:
    """exp(-M x) for every x in ``distances``, via the eigen-decomposition of M.

    Returns an array of shape ``(len(distances), 2, 2)``.
    """
    m = propagation_coefficients(params).matrix()
    eigvals, eigvecs = np.linalg.eig(m)
    inv = np.linalg.inv(eigvecs)
    x = np.asarray(distances, dtype=float)
    decay = np.exp(-np.multiply.outer(x, eigvals))
    return np.einsum("ij,nj,jk->nik", eigvecs, decay, inv)


def transfer_matrix_expm(params: MediumParams) -> TransferMatrix:
    """exp(-M L) by numerical matrix exponentiation of the coupling matrix."""
    (t,) = propagator(params, np.array([params.length]))
    return TransferMatrix(
        a=complex(t[0, 0]),
        b=complex(t[0, 1]),
        c=complex(t[1, 0]),
        d=complex(t[1, 1]),
        phi_c=params.phi_c,
        phi_d=params.phi_d,
    )


def diffusion_matrices(
    gamma: float, populations: PopulationSet
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Normal- and anti-normal-ordered diffusion matrices over transitions (21, 31, 41).

    Rows and columns follow ``TRANSITIONS``.  The normal-ordered matrix only
    has the ground-coherence entry; the anti-normal one is diagonal in the
    two optical coherences.
    """
    if not (gamma > 0 and math.isfinite(gamma)):
        raise DomainError(f"gamma must be finite and > 0, got {gamma}")
    d_normal = np.zeros((3, 3))
    d_normal[0, 0] = 0.5 * gamma * (populations.sigma33 + populations.sigma44)
    d_antinormal = np.diag([0.0, gamma * populations.sigma11, gamma * populations.sigma11])
    return d_normal, d_antinormal


def noise_coefficients(
    params: MediumParams,
    rabi: float = 1.0,
    populations: PopulationSet | None = None,
) -> NoiseModel:
    """Langevin-force coefficients for both modes plus the diffusion matrices."""
    if not (rabi > 0 and math.isfinite(rabi)):
        raise DomainError(f"rabi must be finite and > 0, got {rabi}")
    populations = populations or PopulationSet()
    g, delta = params.gamma, params.delta
    root = math.sqrt(_coupling(params))
    denom = g + 1j * delta
    theta = params.loop_phase
    zeta_p = {
        21: 1j * root * (1j * g - 2.0 * delta) / (denom * rabi) * np.exp(-1j * params.phi_c),
        31: -1j * root / denom,
        41: 1j * root / denom * np.exp(-1j * theta),
    }
    zeta_s = {
        21: 1j * root * (1j * g) / (denom * rabi) * np.exp(-1j * params.phi_d),
        31: 1j * root / denom * np.exp(1j * theta),
        41: -1j * root / denom,
    }
    d_normal, d_antinormal = diffusion_matrices(g, populations)
    return NoiseModel(
        rabi=rabi,
        zeta_p={k: complex(v) for k, v in zeta_p.items()},
        zeta_s={k: complex(v) for k, v in zeta_s.items()},
        d_normal=d_normal,
        d_antinormal=d_antinormal,
        populations=populations,
    )


def _composite_gauss_legendre(values, length: float, panels: int, order: int) -> NDArray[np.float64]:
    nodes, weights = leggauss(order)
    h = length / panels
    left = np.arange(panels) * h
    z = (left[:, None] + 0.5 * h * (nodes[None, :] + 1.0)).ravel()
    w = np.tile(0.5 * h * weights, panels)
    return w @ values(z)


def loss_identity_check(
    params: MediumParams,
    quad_points: int = 16,
    tol: float = 1e-9,
    max_panels: int = 1 << 14,
) -> LossIdentityReport:
    """Integrate the anti-normal noise feeding each output mode and compare it
    with the loss 1 - |A|^2 - |B|^2 (probe) and 1 - |C|^2 - |D|^2 (signal).

    Composite Gauss-Legendre with ``quad_points`` nodes per panel; the panel
    count doubles until successive estimates agree to well below ``tol``.
    """
    if quad_points < 16:
        raise DomainError(f"quad_points must be >= 16, got {quad_points}")
    noise = noise_coefficients(params)
    rate = np.diag(noise.d_antinormal)[1:]  # D_1331, D_1441
    vectors = np.stack([noise.noise_vector(31), noise.noise_vector(41)], axis=1)
    length = params.length

    def integrands(z: NDArray[np.float64]) -> NDArray[np.float64]:
        # propagated noise columns, shape (nz, 2 rows, 2 transitions)
        prop = propagator(params, length - z) @ vectors
        return np.abs(prop) ** 2 @ rate

    def both(panels: int) -> tuple[float, float]:
        probe, signal = _composite_gauss_legendre(integrands, length, panels, quad_points)
        return float(probe), float(signal)

    panels = 1
    previous = both(panels)
    converged = False
    while panels < max_panels:
        panels *= 2
        current = both(panels)
        change = max(abs(current[0] - previous[0]), abs(current[1] - previous[1]))
        previous = current
        if change <= 0.01 * tol:
            converged = True
            break

    tm = transfer_matrix(params)
    rhs_probe = tm.probe_loss()
    rhs_signal = tm.signal_loss()
    closed = -0.5 * math.expm1(-2.0 * params.loss_exponent)
    lhs_probe, lhs_signal = previous
    residuals = {
        "probe_vs_matrix": abs(lhs_probe - rhs_probe),
        "signal_vs_matrix": abs(lhs_signal - rhs_signal),
        "probe_vs_closed_form": abs(lhs_probe - closed),
        "signal_vs_closed_form": abs(lhs_signal - closed),
        "matrix_vs_closed_form": abs(rhs_probe - closed),
    }
    return LossIdentityReport(
        lhs_probe=lhs_probe,
        lhs_signal=lhs_signal,
        rhs_probe=rhs_probe,
        rhs_signal=rhs_signal,
        closed_form=closed,
        residuals=residuals,
        panels=panels,
        converged=converged,
    )
