"""Integrity checks run by ``doublelambda check``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .fock import FockDensityMatrix, apply_channel, apply_channel_dilation, channel_choi
from .medium import (
    MediumParams,
    loss_identity_check,
    transfer_matrix,
    transfer_matrix_expm,
)

OD_GRID = (0.0, 1.0, 10.0, 50.0, 200.0, 1000.0)
PHASE_GRID = (0.0, math.pi / 3, math.pi)


def delta_grid(od: float) -> tuple[float, ...]:
    return (0.0, 1.0, 13.0, od / math.pi, od / (2.0 * math.pi))


def parameter_grid(ods=OD_GRID, phases=PHASE_GRID):
    for od, theta in product(ods, phases):
        for delta in delta_grid(od):
            yield MediumParams(od=od, delta=delta, phi_c=theta, phi_d=0.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tol: float
    cases: int

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} residual={self.residual:.3e}  tol={self.tol:.0e}  cases={self.cases}"


def _elementwise(t1, t2) -> float:
    return float(np.max(np.abs(t1.as_array() - t2.as_array())))


def check_transfer_identities() -> list[CheckResult]:
    expm_gap = row = passivity = 0.0
    n = 0
    for params in parameter_grid():
        tm = transfer_matrix(params)
        expm_gap = max(expm_gap, _elementwise(tm, transfer_matrix_expm(params)))
        phase = np.exp(1j * params.loop_phase)
        row = max(row, abs(tm.a + tm.b * phase - 1.0), abs(tm.d + tm.c / phase - 1.0))
        closed = -0.5 * math.expm1(-2.0 * params.loss_exponent)
        passivity = max(passivity, abs(tm.probe_loss() - closed), abs(tm.signal_loss() - closed))
        n += 1
    return [
        CheckResult("transfer analytic vs expm", expm_gap, 1e-12, n),
        CheckResult("transfer row identity", row, 1e-14, n),
        CheckResult("transfer passivity closed form", passivity, 1e-12, n),
    ]


def check_loss_identity() -> CheckResult:
    worst = 0.0
    n = 0
    for od in (1.0, 50.0, 200.0, 1000.0):
        for delta in (0.0, 13.0, od / math.pi):
            report = loss_identity_check(MediumParams(od, delta))
            worst = max(worst, report.max_residual if report.converged else math.inf)
            n += 1
    return CheckResult("noise/loss quadrature identity", worst, 1e-9, n)


def _unit_inputs(nmax: int = 2):
    dim = (nmax + 1) ** 2
    support = [p * (nmax + 1) + s for p in range(nmax + 1) for s in range(nmax + 1) if p + s <= nmax]
    for i in support:
        for j in support:
            op = np.zeros((dim, dim), dtype=complex)
            op[i, j] = 1.0
            yield FockDensityMatrix(nmax, op)


def check_channel(ods=(0.0, 1.0, 50.0, 200.0, 1000.0)) -> list[CheckResult]:
    gap = trace = choi = 0.0
    n = 0
    for params in parameter_grid(ods=ods, phases=(0.0, math.pi / 3)):
        tm = transfer_matrix(params)
        for op in _unit_inputs():
            out = apply_channel(tm, op)
            gap = max(gap, float(np.max(np.abs(out.matrix - apply_channel_dilation(tm, op).matrix))))
            trace = max(trace, abs(out.trace() - op.trace()))
        choi = max(choi, -float(np.linalg.eigvalsh(channel_choi(tm, 2))[0]))
        n += 1
    return [
        CheckResult("channel vs dilation oracle", gap, 1e-10, n),
        CheckResult("channel trace preservation", trace, 1e-10, n),
        CheckResult("choi positivity (-min eig)", max(choi, 0.0), 1e-10, n),
    ]


def run_all() -> list[CheckResult]:
    return [*check_transfer_identities(), check_loss_identity(), *check_channel()]
