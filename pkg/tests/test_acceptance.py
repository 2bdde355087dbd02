"""Acceptance gate. Tolerances are fixed here and must not be relaxed."""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from doublelambda.checks import _unit_inputs, parameter_grid
from doublelambda.fock import apply_channel, apply_channel_dilation, channel_choi
from doublelambda.gates import (
    coherent_response,
    hadamard_detuning,
    hom_probabilities,
    noon_report,
    qubit_probabilities,
    swap_report,
)
from doublelambda.medium import MediumParams, loss_identity_check, transfer_matrix, transfer_matrix_expm

STARTED = time.perf_counter()
OD_LADDER = (50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0)


@pytest.mark.criterion(1, "analytic vs matrix-exponential transfer matrix <= 1e-12, < 1 s")
def test_criterion_01(measured):
    start = time.perf_counter()
    worst = max(
        float(np.max(np.abs(transfer_matrix(p).as_array() - transfer_matrix_expm(p).as_array())))
        for p in parameter_grid()
    )
    elapsed = time.perf_counter() - start
    measured.update(max_gap=worst, seconds=elapsed)
    assert worst <= 1e-12
    assert elapsed < 1.0


@pytest.mark.criterion(2, "noise quadrature vs loss and closed form <= 1e-9")
def test_criterion_02(measured):
    reports = [
        loss_identity_check(MediumParams(od, delta))
        for od in (1.0, 50.0, 200.0, 1000.0)
        for delta in (0.0, 13.0, od / math.pi)
    ]
    worst = max(r.max_residual for r in reports)
    measured.update(max_residual=worst, converged=all(r.converged for r in reports))
    assert all(r.converged for r in reports)
    assert worst <= 1e-9


@pytest.mark.criterion(3, "channel trace, Choi positivity, dilation agreement <= 1e-10")
def test_criterion_03(measured):
    trace = gap = choi = 0.0
    for params in parameter_grid(ods=(0.0, 1.0, 50.0, 200.0, 1000.0)):
        tm = transfer_matrix(params)
        for op in _unit_inputs(2):
            out = apply_channel(tm, op)
            gap = max(gap, float(np.max(np.abs(out.matrix - apply_channel_dilation(tm, op).matrix))))
            trace = max(trace, abs(out.trace() - op.trace()))
        choi = min(choi, float(np.linalg.eigvalsh(channel_choi(tm, 2))[0]))
    measured.update(trace_dev=trace, choi_min_eig=choi, dilation_gap=gap)
    assert trace <= 1e-10
    assert choi >= -1e-10
    assert gap <= 1e-10


@pytest.mark.criterion(4, "coherent transmittance 1.686 / 0.059 (+-0.002), 2pi-periodic")
def test_criterion_04(measured):
    params = MediumParams(50.0, 13.0)
    high = coherent_response(params, 1.0, math.pi / 2).t_p
    low = coherent_response(params, 1.0, 3 * math.pi / 2).t_p
    phases = np.linspace(0, 2 * math.pi, 97)
    period = max(
        abs(coherent_response(params, 1.0, x).t_p - coherent_response(params, 1.0, x + 2 * math.pi).t_p)
        + abs(coherent_response(params, 1.0, x).t_s - coherent_response(params, 1.0, x + 2 * math.pi).t_s)
        for x in phases
    )
    measured.update(t_p_high=high, t_p_low=low, period_gap=period)
    assert high == pytest.approx(1.686, abs=2e-3)
    assert low == pytest.approx(0.059, abs=2e-3)
    assert period <= 1e-12


@pytest.mark.criterion(5, "single-photon qubit P=0.9758+-0.001, P_other<=3e-4, sqrtP=0.988+-0.003")
def test_criterion_05(measured):
    r = qubit_probabilities(MediumParams(200.0, 200 / math.pi), 1.0, math.pi / 2)
    measured.update(p_1p0s=r.p_1p0s, p_0p1s=r.p_0p1s, sqrt_p=r.fidelity_sqrt)
    assert r.p_1p0s == pytest.approx(0.9758, abs=1e-3)
    assert r.p_0p1s <= 3e-4
    assert r.fidelity_sqrt == pytest.approx(0.988, abs=3e-3)
    assert abs(r.fidelity_sqrt - 0.99) <= 5e-3


@pytest.mark.criterion(6, "Hadamard detuning at u=1 equals 200/pi +- 0.01 on both branches")
def test_criterion_06(measured):
    probe = hadamard_detuning(200.0, 1.0, "probe")
    signal = hadamard_detuning(200.0, 1.0, "signal")
    target = 200 / math.pi
    measured.update(probe=probe, signal=signal, target=target, offset=probe - target)
    assert probe == pytest.approx(signal, abs=1e-9)
    assert probe == pytest.approx(target, abs=0.01)
    assert signal == pytest.approx(target, abs=0.01)


@pytest.mark.criterion(7, "HOM dip <= 1e-3, colour swap 0.829+-0.002, bunching 0.476+-0.002")
def test_criterion_07(measured):
    dip = hom_probabilities(MediumParams(200.0, 200 / math.pi))
    swap = hom_probabilities(MediumParams(200.0, 100 / math.pi))
    measured.update(dip=dip.p_1p1s, swap_peak=swap.p_1p1s, p_2p0s=dip.p_2p0s, p_0p2s=dip.p_0p2s)
    assert dip.p_1p1s <= 1e-3
    assert swap.p_1p1s == pytest.approx(0.829, abs=2e-3)
    assert dip.p_2p0s == pytest.approx(0.476, abs=2e-3)
    assert dip.p_0p2s == pytest.approx(0.476, abs=2e-3)


@pytest.mark.criterion(8, "NOON fidelity 0.9902+-0.001 at od 500, nondecreasing in od")
def test_criterion_08(measured):
    at_500 = noon_report(MediumParams(500.0, 500 / math.pi)).noon_fidelity
    ladder = [noon_report(MediumParams(od, od / math.pi)).noon_fidelity for od in OD_LADDER]
    monotone = all(b >= a for a, b in zip(ladder, ladder[1:]))
    measured.update(fidelity_500=at_500, monotone=monotone)
    assert at_500 == pytest.approx(0.9902, abs=1e-3)
    assert monotone


@pytest.mark.criterion(9, "SWAP F=0.990+-0.001, std 0.007+-0.002, success 0.981+-0.001; od 500 F=0.980+-0.002")
def test_criterion_09(measured):
    r = swap_report(MediumParams(1000.0, 500 / math.pi))
    half = swap_report(MediumParams(500.0, 250 / math.pi))
    measured.update(mean=r.mean_fidelity, std=r.std_fidelity, success=r.mean_success, mean_500=half.mean_fidelity)
    assert r.mean_fidelity == pytest.approx(0.990, abs=1e-3)
    assert r.std_fidelity == pytest.approx(0.007, abs=2e-3)
    assert r.mean_success == pytest.approx(0.981, abs=1e-3)
    assert half.mean_fidelity == pytest.approx(0.980, abs=2e-3)


PROPERTY_SUITES = [
    "tests/test_medium.py::test_phase_covariance",
    "tests/test_fock.py::test_linearity",
    "tests/test_fock.py::test_two_photon_diagonal_ignores_loop_phase",
    "tests/test_fock.py::test_coherent_consistency",
]


@pytest.mark.criterion(10, "property suites pass; acceptance run < 120 s")
def test_criterion_10(measured):
    root = Path(__file__).resolve().parent.parent
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_SUITES],
        cwd=root, capture_output=True, text=True, check=False,
    )
    elapsed = time.perf_counter() - STARTED
    measured.update(properties_exit=proc.returncode, seconds=elapsed)
    assert proc.returncode == 0, proc.stdout[-2000:]
    assert elapsed < 120
