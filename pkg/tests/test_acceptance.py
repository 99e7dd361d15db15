"""Acceptance suite: one test per release criterion, one printed line each.

Each criterion is evaluated at its stated tolerance and runtime budget and
reported as a single PASS/FAIL line (run pytest with -s to see them).
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from wqed import (
    FrequencyGrid,
    Mode,
    SystemParams,
    TwoPhotonAmplitude,
    make_gaussian_packet,
    packet_to_time_domain,
)
from wqed import chiral, oracle, twomode
from wqed.fluorescence import (
    BlochState,
    DriveParams,
    evolve_bloch,
    lindblad_trajectory,
    regression_g1,
    regression_g1_reversed,
)

P = SystemParams(0.0, 1.0)
P2 = SystemParams(0.0, 1.0, Mode.TWO_MODE)


def _report(number: int, name: str, ok: bool, detail: str) -> None:
    print(f"[acceptance {number}] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"acceptance {number} {name}: {detail}"


def _sup_extraction_error(count: int, span: float) -> float:
    grid = FrequencyGrid.centered(0.0, span, count)
    model = oracle.DiscreteModel(grid, 0.0, 1.0, 1)
    packet = make_gaussian_packet(grid, 0.0, 2.0)
    out = oracle.extract_one_photon_smatrix(model, packet, settle=8.0)
    mass = np.cumsum(np.abs(packet.amplitude) ** 2 * grid.step)
    band = (mass >= 0.005) & (mass <= 0.995)
    ratio = out.amplitude[band] / packet.amplitude[band]
    return float(np.max(np.abs(ratio - chiral.transmission(grid.points()[band], P))))


def test_acceptance_1_single_photon_law():
    start = time.time()
    sup_400 = _sup_extraction_error(400, 160.0)
    sup_refined = _sup_extraction_error(800, 320.0)
    elapsed = time.time() - start
    ratio = sup_400 / sup_refined
    ok = sup_400 <= 1e-2 and 1.7 <= ratio <= 2.3 and elapsed <= 10.0
    _report(
        1,
        "single-photon transmission law",
        ok,
        f"sup={sup_400:.2e} @ N=400, refinement ratio={ratio:.2f}, {elapsed:.1f}s",
    )


def test_acceptance_2_unimodularity_and_flux():
    start = time.time()
    rng = np.random.default_rng(2)
    k = (rng.random(10_000) - 0.5) * 200.0
    uni = float(np.max(np.abs(np.abs(chiral.transmission(k, P)) - 1.0)))
    flux = float(
        np.max(
            np.abs(
                np.abs(twomode.reflection(k, P2)) ** 2
                + np.abs(twomode.transmission(k, P2)) ** 2
                - 1.0
            )
        )
    )
    elapsed = time.time() - start
    ok = uni <= 1e-12 and flux <= 1e-12 and elapsed <= 1.0
    _report(2, "unimodularity and flux conservation", ok, f"|t| dev={uni:.1e}, flux dev={flux:.1e}")


def _narrowband_peak_ratio(k0: float) -> float:
    """Oracle peak population over the analytic Lorentzian prediction."""
    width, delay = 0.05, 62.0
    grid = FrequencyGrid.centered(0.0, 160.0, 3200)
    model = oracle.DiscreteModel(grid, 0.0, 1.0, 1)
    packet = make_gaussian_packet(grid, k0, width)
    state = oracle.one_photon_state(model, packet.delayed(delay))
    peak_pop, now = 0.0, 0.0
    for _ in range(40):
        state = oracle.evolve(model, state, 2.0)
        now += 2.0
        peak_pop = max(peak_pop, float(abs(state.amplitudes[0]) ** 2))
    envelope = np.abs(packet_to_time_domain(packet, np.linspace(-3.0, 3.0, 61) + 0.0)) ** 2
    predicted = abs(chiral.excitation_amplitude(k0, P)) ** 2 * envelope.max()
    return peak_pop / predicted


def test_acceptance_3_excitation_lorentzian():
    start = time.time()
    peak = chiral.excitation_probability(0.0, P)
    hwhm = chiral.excitation_probability(1.0, P)
    analytic_ok = (
        abs(peak - 1.0 / math.pi) < 1e-12 and abs(hwhm - 0.5 / math.pi) < 1e-12
    )
    ratios = [_narrowband_peak_ratio(k0) for k0 in (0.0, 1.0, -1.0)]
    oracle_ok = all(abs(r - 1.0) <= 2e-2 for r in ratios)
    elapsed = time.time() - start
    ok = analytic_ok and oracle_ok and elapsed <= 30.0
    _report(
        3,
        "excitation Lorentzian",
        ok,
        f"peak=tau/pi exact, oracle/analytic at 0,+1,-1: "
        f"{', '.join(f'{r:.4f}' for r in ratios)}, {elapsed:.1f}s",
    )


def test_acceptance_4_two_photon_smatrix():
    start = time.time()
    grid = FrequencyGrid.centered(0.0, 80.0, 160)
    model = oracle.DiscreteModel(grid, 0.0, 1.0, 1)
    packet = make_gaussian_packet(grid, 0.0, 2.0)
    f = TwoPhotonAmplitude(grid, np.outer(packet.amplitude, packet.amplitude)).normalize()

    analytic, report = chiral.scatter_two_photon(f, P)
    numeric = oracle.extract_two_photon_smatrix(model, f, settle=7.5)
    scale = np.linalg.norm(analytic.amplitude)
    rel_full = float(np.linalg.norm(numeric.amplitude - analytic.amplitude) / scale)

    delta_only = chiral.two_photon_delta_part(f, P)
    rel_without = float(np.linalg.norm(numeric.amplitude - delta_only.amplitude) / scale)

    norm_dev = abs(report.output_norm - 1.0)
    elapsed = time.time() - start
    ok = (
        rel_full <= 2e-2
        and norm_dev <= 5e-3
        and rel_without >= 10.0 * rel_full
        and elapsed <= 300.0
    )
    _report(
        4,
        "two-photon S-matrix vs sector-2 verifier",
        ok,
        f"relL2={rel_full:.2e}, |1-norm|={norm_dev:.1e}, "
        f"without background {rel_without / rel_full:.0f}x worse, {elapsed:.1f}s",
    )


def test_acceptance_5_two_mode_channels():
    start = time.time()
    resonance_ok = twomode.reflection(0.0, P2) == pytest.approx(-1.0, abs=1e-15) and abs(
        twomode.transmission(0.0, P2)
    ) < 1e-15

    grid = FrequencyGrid.centered(0.0, 96.0, 120)
    model = oracle.DiscreteModel.from_params(P2, grid)
    packet = make_gaussian_packet(grid, 0.0, 2.5)
    f = TwoPhotonAmplitude(grid, np.outer(packet.amplitude, packet.amplitude)).normalize()
    analytic = twomode.scatter_two_photon_two_mode(f, P2)
    numeric = oracle.extract_two_photon_smatrix(model, f, settle=4.0)
    na, no = analytic.channel_norms(), numeric.channel_norms()
    deviations = {ch: abs(na[ch] - no[ch]) for ch in na}
    elapsed = time.time() - start
    ok = resonance_ok and max(deviations.values()) <= 1e-2 and elapsed <= 300.0
    _report(
        5,
        "two-mode channel norms vs verifier",
        ok,
        "norm devs "
        + ", ".join(f"{ch}={dev:.1e}" for ch, dev in deviations.items())
        + f", rbar(res)=-1 exact, {elapsed:.1f}s",
    )


def test_acceptance_6_fluorescence_cross_validation():
    start = time.time()
    rng = np.random.default_rng(6)
    sup = 0.0
    for _ in range(20):
        alpha = complex(rng.uniform(0.05, 1.5) * np.exp(2j * math.pi * rng.random()))
        drive = DriveParams(alpha, float(rng.uniform(-3.0, 3.0)))
        bloch = evolve_bloch(BlochState.ground(), drive, P, 10.0, 0.01)
        lind = lindblad_trajectory(drive, P, 10.0, 0.01)
        sup = max(
            sup,
            max(max(abs(a.sm - b.sm), abs(a.sz - b.sz)) for a, b in zip(bloch, lind)),
        )

    decay = evolve_bloch(BlochState.excited(), DriveParams(0j, 0.0), P, 3.0, 0.01)
    ts = np.array([s.t for s in decay[1:]])
    slope = np.linalg.lstsq(
        np.vstack([ts, np.ones_like(ts)]).T,
        np.log([(s.sz + 1.0) / 2.0 for s in decay[1:]]),
        rcond=None,
    )[0][0]
    rate_err = abs(-slope - 2.0 / P.tau)

    drive = DriveParams(0.4 + 0.3j, 0.9)
    ts_g1 = np.linspace(2.0, 9.0, 29)
    herm = float(
        np.max(
            np.abs(
                regression_g1(drive, P, 2.0, ts_g1).g1
                - np.conj(regression_g1_reversed(drive, P, 2.0, ts_g1).g1)
            )
        )
    )
    null = float(
        np.max(np.abs(regression_g1(DriveParams(0j, 0.0), P, 2.0, ts_g1).g1))
    )
    elapsed = time.time() - start
    ok = sup <= 1e-7 and rate_err <= 1e-4 and herm <= 1e-8 and null <= 1e-8 and elapsed <= 30.0
    _report(
        6,
        "fluorescence cross-validation",
        ok,
        f"Bloch-Lindblad sup={sup:.1e}, rate err={rate_err:.1e}, "
        f"G1 herm={herm:.1e}, null={null:.1e}, {elapsed:.1f}s",
    )


def test_acceptance_7_identity_relations():
    start = time.time()
    rng = np.random.default_rng(7)
    dev = 0.0
    for params in (P, SystemParams(0.7, 1.6)):
        k = params.omega_atom + (rng.random(10_000) - 0.5) * 200.0 / params.tau
        t = chiral.transmission(k, params)
        s = chiral.excitation_amplitude(k, params)
        dev = max(dev, float(np.max(np.abs(t - (1.0 - 1j * math.sqrt(2.0 / params.tau) * s)))))
        dev = max(dev, float(np.max(np.abs(t * np.conj(s) - s))))
    elapsed = time.time() - start
    ok = dev <= 1e-12 and elapsed <= 1.0
    _report(7, "transmission-excitation identities", ok, f"max dev={dev:.1e}")


def test_acceptance_8_reproducibility(tmp_path):
    start = time.time()
    outputs = []
    for threads, tag in (("1", "a"), ("8", "b")):
        env = dict(os.environ, WQED_THREADS=threads)
        spectrum = tmp_path / f"spectrum_{tag}.csv"
        scatter = tmp_path / f"scatter2_{tag}.csv"
        for args in (
            ["spectrum", "--omega", "0", "--tau", "1", "--kmin", "-5", "--kmax", "5",
             "--n", "2001", "--output", str(spectrum)],
            ["scatter2", "--omega", "0", "--tau", "1", "--kmin", "-12", "--kmax", "12",
             "--n", "161", "--width", "1", "--output", str(scatter)],
        ):
            proc = subprocess.run(
                [sys.executable, "-m", "wqed.cli", *args],
                env=env,
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
        outputs.append((spectrum.read_bytes(), scatter.read_bytes()))
    elapsed = time.time() - start
    ok = outputs[0] == outputs[1] and elapsed <= 60.0
    _report(8, "byte-identical CLI reruns", ok, f"2 commands x 2 thread counts, {elapsed:.1f}s")
