"""
Gate-level figures of merit for the double-Lambda medium.

Closed-form amplitudes are used wherever they exist; fidelities are taken
from the full channel output so that photon loss enters as mixedness.
Fidelities follow the pure-target convention ``sqrt(<psi|rho|psi>)``; the
squared (linear) value is reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .fock import (
    FockDensityMatrix,
    PureTwoModeState,
    apply_channel,
    mode_probabilities,
    noon_state,
    overlap,
)
from .medium import DomainError, MediumParams, TransferMatrix, transfer_matrix


class NoSolutionError(DomainError):
    """No detuning in the search bracket satisfies the gate condition."""


COMPUTATIONAL_INPUTS = {"00": (0, 0), "10": (1, 0), "01": (0, 1), "11": (1, 1)}
SWAPPED = {"00": "00", "10": "01", "01": "10", "11": "11"}


def _wrap_phase(angle: float) -> float:
    # into (-pi, pi]
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped + 0.0


@dataclass(frozen=True)
class CoherentResponse:
    t_p: float
    t_s: float
    dphi_p: float
    dphi_s: float


@dataclass(frozen=True)
class QubitReport:
    p_1p0s: float
    p_0p1s: float
    p_loss: float
    fidelity_sqrt: float
    fidelity_linear: float
    target: str = "probe"


@dataclass(frozen=True)
class HomReport:
    p_2p0s: float
    p_0p2s: float
    p_1p1s: float
    loss_sector: float
    noon_fidelity: float
    noon_fidelity_linear: float
    noon_phase: float


@dataclass(frozen=True)
class SwapReport:
    per_input_fidelity: dict[str, float]
    per_input_fidelity_linear: dict[str, float]
    mean_fidelity: float
    std_fidelity: float
    truth_table: dict[str, dict[str, float]]
    mean_success: float


def _primed(tm: TransferMatrix) -> tuple[complex, complex, complex, complex]:
    """(A*, B'*, C'*, D*) with the loop phase removed from the cross terms."""
    theta = tm.loop_phase
    return (
        np.conj(tm.a),
        np.conj(tm.b) * np.exp(-1j * theta),
        np.conj(tm.c) * np.exp(1j * theta),
        np.conj(tm.d),
    )


def coherent_response(params: MediumParams, u_beta: float, phi_r: float) -> CoherentResponse:
    if not u_beta > 0:
        raise DomainError(f"u_beta must be > 0, got {u_beta}")
    a, b, c, d = _primed(transfer_matrix(params))
    probe = a + u_beta * b * np.exp(-1j * phi_r)
    signal = c * np.exp(1j * phi_r) / u_beta + d
    return CoherentResponse(
        t_p=float(abs(probe) ** 2),
        t_s=float(abs(signal) ** 2),
        dphi_p=_wrap_phase(float(np.angle(probe))),
        dphi_s=_wrap_phase(float(np.angle(signal))),
    )


def qubit_state(u: float, phi_u: float) -> PureTwoModeState:
    """(|1,0> + u e^{-i phi_u} |0,1>) / sqrt(1 + u^2)."""
    if not u >= 0:
        raise DomainError(f"u must be >= 0, got {u}")
    return PureTwoModeState({(1, 0): 1.0, (0, 1): u * np.exp(-1j * phi_u)}, normalize=True)


def qubit_probabilities(
    params: MediumParams, u: float, phi_u: float, target: str = "probe"
) -> QubitReport:
    """Output colour probabilities of a single-photon two-colour qubit.

    ``target`` picks the one-colour state the fidelity is measured against.
    """
    if not u >= 0:
        raise DomainError(f"u must be >= 0, got {u}")
    if target not in ("probe", "signal"):
        raise DomainError(f"target must be 'probe' or 'signal', got {target!r}")
    a, b, c, d = _primed(transfer_matrix(params))
    phi_r = phi_u - params.loop_phase
    norm = 1.0 + u * u
    p10 = float(abs(a + u * b * np.exp(-1j * phi_r)) ** 2 / norm)
    p01 = float(abs(c * np.exp(1j * phi_r) + u * d) ** 2 / norm)
    hit = p10 if target == "probe" else p01
    return QubitReport(
        p_1p0s=p10,
        p_0p1s=p01,
        p_loss=1.0 - p10 - p01,
        fidelity_sqrt=math.sqrt(max(hit, 0.0)),
        fidelity_linear=hit,
        target=target,
    )


def _balance(branch: str, u: float, gamma: float, od: float):
    """Amplitude-balance function of the detuning; works on scalars and arrays."""
    if branch not in ("probe", "signal"):
        raise DomainError(f"branch must be 'probe' or 'signal', got {branch!r}")

    def f(delta):
        # |A| = |D| = |1 + E| / 2 and |B| = |C| = |1 - E| / 2
        e = np.exp(1j * od * gamma / (2.0 * (np.asarray(delta) - 1j * gamma)))
        same, cross = np.abs(1.0 + e), np.abs(1.0 - e)
        if branch == "probe":
            # |B| = u |A| puts all of the qubit into the probe mode at phi_r = pi/2
            return 0.5 * (cross - u * same)
        # u |C| = |D| puts it into the signal mode at phi_r = 3 pi/2
        return 0.5 * (u * cross - same)

    return f


def hadamard_detuning(
    od: float, u: float, branch: str = "probe", gamma: float = 1.0, grid: int = 4096
) -> float:
    """Detuning (units of gamma) that routes a qubit of amplitude ratio ``u``
    entirely into one colour.

    The search runs over (0, od * gamma] from the far-detuned end and returns
    the first crossing met, i.e. the principal branch where the FWM phase
    is still below pi.
    """
    if not od > 0:
        raise DomainError(f"od must be > 0, got {od}")
    if not u > 0:
        raise DomainError(f"u must be > 0, got {u}")
    f = _balance(branch, u, gamma, od)
    upper = od * gamma
    deltas = np.linspace(upper, upper / grid, grid)
    values = f(deltas)
    hits = np.flatnonzero(values == 0.0)
    flips = np.flatnonzero(values[:-1] * values[1:] < 0)
    first_hit = hits[0] if hits.size else grid
    if flips.size and flips[0] < first_hit:
        i = flips[0]
        return float(brentq(lambda x: float(f(x)), deltas[i + 1], deltas[i], xtol=1e-12, rtol=1e-14, maxiter=200))
    if hits.size:
        return float(deltas[first_hit])
    raise NoSolutionError(f"no {branch} detuning in (0, {upper}] for od={od}, u={u}")


def two_photon_output(params: MediumParams) -> FockDensityMatrix:
    return apply_channel(transfer_matrix(params), FockDensityMatrix.fock(1, 1, 2))


def hom_probabilities(params: MediumParams) -> HomReport:
    """Two-photon output statistics for a |1_p 1_s> input."""
    tm = transfer_matrix(params)
    a, b, c, d = (np.conj(x) for x in (tm.a, tm.b, tm.c, tm.d))
    p20 = float(2.0 * abs(a * b) ** 2)
    p02 = float(2.0 * abs(c * d) ** 2)
    p11 = float(abs(a * d + b * c) ** 2)
    phase = -2.0 * params.loop_phase
    linear = overlap(two_photon_output(params), noon_state(2, phase))
    return HomReport(
        p_2p0s=p20,
        p_0p2s=p02,
        p_1p1s=p11,
        loss_sector=1.0 - p20 - p02 - p11,
        noon_fidelity=math.sqrt(linear),
        noon_fidelity_linear=linear,
        noon_phase=_wrap_phase(phase),
    )


def noon_report(params: MediumParams) -> HomReport:
    """HOM statistics together with the fidelity to (|2,0> + e^{-2i(phi_c-phi_d)}|0,2>)/sqrt 2."""
    return hom_probabilities(params)


def swap_targets(tm: TransferMatrix) -> dict[str, PureTwoModeState]:
    """Ideal SWAP outputs, carrying the deterministic conversion phases."""
    c_phase = float(np.angle(np.conj(tm.c)))
    b_phase = float(np.angle(np.conj(tm.b)))
    pair_phase = float(np.angle(np.conj(tm.a * tm.d) + np.conj(tm.b * tm.c)))
    return {
        "00": PureTwoModeState({(0, 0): 1.0}),
        "10": PureTwoModeState({(0, 1): np.exp(1j * c_phase)}),
        "01": PureTwoModeState({(1, 0): np.exp(1j * b_phase)}),
        "11": PureTwoModeState({(1, 1): np.exp(1j * pair_phase)}),
    }


def swap_report(params: MediumParams) -> SwapReport:
    tm = transfer_matrix(params)
    targets = swap_targets(tm)
    fid: dict[str, float] = {}
    fid_linear: dict[str, float] = {}
    table: dict[str, dict[str, float]] = {}
    for label, (n_p, n_s) in COMPUTATIONAL_INPUTS.items():
        rho = apply_channel(tm, FockDensityMatrix.fock(n_p, n_s, 2))
        value = overlap(rho, targets[label])
        fid_linear[label] = value
        fid[label] = math.sqrt(value)
        probs = mode_probabilities(rho)
        table[label] = {
            f"{p}{s}": probs.get((p, s), 0.0) for p in range(3) for s in range(3 - p)
        }
    values = np.array(list(fid.values()))
    success = [table[label][SWAPPED[label]] for label in COMPUTATIONAL_INPUTS]
    return SwapReport(
        per_input_fidelity=fid,
        per_input_fidelity_linear=fid_linear,
        mean_fidelity=float(values.mean()),
        std_fidelity=float(values.std()),
        truth_table=table,
        mean_success=float(np.mean(success)),
    )
