import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.linalg import expm

from braggtrap.closed_form import weak_gain, xi2_closed
from braggtrap.dicke import SpinOp, expectation, make_css, operator_matrix
from braggtrap.errors import FlatSlopeError
from braggtrap.optimize import OptimizationSpec, optimize_alpha_beta
from braggtrap.sequence import (
    SequenceConfig,
    gain_at_zero,
    output_moments,
    run_sequence,
    run_sequence_stepwise,
    sensitivity,
    sequence_from_trap,
    signal_curve,
)
from braggtrap.trap import AtomTrapConfig, gravity_phase, tau_accumulated, tau_tilde


def dense_output(cfg: SequenceConfig) -> np.ndarray:
    """Paper-ordered product of dense exponentials, small N oracle."""
    n = cfg.n_atoms
    sx = operator_matrix(n, SpinOp.SX)
    sz = operator_matrix(n, SpinOp.SZ)
    sz2 = sz @ sz
    unitary = (
        expm(1j * math.pi / 2 * sx)
        @ expm(-1j * cfg.beta * sx)
        @ expm(-1j * cfg.tau_tilde * sz2)
        @ expm(-1j * cfg.theta * sz)
        @ expm(-1j * math.pi / 2 * sx)
        @ expm(-1j * cfg.alpha * sx)
    )
    m = 0.5 * n - np.arange(n + 1)
    psi = np.exp(-1j * cfg.tau * m**2) * make_css(n, math.pi / 2, 0.0).amplitudes
    return unitary @ psi


class TestRunSequence:
    def test_all_zero_is_identity(self):
        out = run_sequence(SequenceConfig(n_atoms=12))
        np.testing.assert_allclose(
            out.amplitudes, make_css(12, math.pi / 2, 0.0).amplitudes, atol=1e-13
        )

    def test_phase_encoding_sign(self):
        # convention pinned by the dense N=2 product: <S_z> = -S sin(theta)
        for n, theta in ((2, 0.3), (20, -1.2), (501, 2.0)):
            _, sz, _ = output_moments(SequenceConfig(n_atoms=n, theta=theta))
            assert sz == pytest.approx(-0.5 * n * math.sin(theta), abs=1e-9 * n)

    def test_matches_dense_unitary(self, rng):
        for _ in range(12):
            n = int(rng.integers(2, 14))
            cfg = SequenceConfig(
                n_atoms=n,
                tau=float(rng.uniform(-0.5, 0.5)),
                tau_tilde=float(rng.uniform(-0.5, 0.5)),
                alpha=float(rng.uniform(-1.5, 1.5)),
                beta=float(rng.uniform(-1.5, 1.5)),
                theta=float(rng.uniform(-2.0, 2.0)),
            )
            np.testing.assert_allclose(
                run_sequence(cfg).amplitudes, dense_output(cfg), atol=1e-12
            )

    def test_pulse_paths_agree(self, rng):
        # conjugated diagonal route vs stepwise laboratory route
        for _ in range(50):
            n = int(rng.integers(2, 101))
            cfg = SequenceConfig(
                n_atoms=n,
                tau=float(rng.uniform(-0.3, 0.3)),
                tau_tilde=float(rng.uniform(-0.3, 0.3)),
                alpha=float(rng.uniform(-math.pi, math.pi)),
                beta=float(rng.uniform(-math.pi, math.pi)),
                theta=float(rng.uniform(-math.pi, math.pi)),
            )
            dev = np.max(np.abs(
                run_sequence(cfg).amplitudes - run_sequence_stepwise(cfg).amplitudes
            ))
            assert dev <= 1e-10

    def test_conjugation_identity_dense(self, rng):
        # R_x^dag(pi/2) exp(-i(tt Sz^2 + th Sz)) R_x(pi/2) = exp(-i(tt Sy^2 + th Sy))
        for n in (2, 7, 13, 20):
            sx = operator_matrix(n, SpinOp.SX)
            sy = operator_matrix(n, SpinOp.SY)
            sz = operator_matrix(n, SpinOp.SZ)
            tt, th = float(rng.uniform(0.0, 0.4)), float(rng.uniform(-1.0, 1.0))
            rot = expm(-1j * math.pi / 2 * sx)
            lhs = rot.conj().T @ expm(-1j * (tt * sz @ sz + th * sz)) @ rot
            rhs = expm(-1j * (tt * sy @ sy + th * sy))
            assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_norm_preserved(self):
        cfg = SequenceConfig(n_atoms=1000, tau=0.01, tau_tilde=0.002,
                             alpha=0.4, beta=-0.8, theta=1.0)
        out = run_sequence(cfg)
        assert abs(np.sum(out.populations()) - 1.0) <= 1e-10

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SequenceConfig(n_atoms=1)
        with pytest.raises(ValueError):
            SequenceConfig(n_atoms=10, tau=math.inf)


class TestGainAtZero:
    def test_shot_noise_reference(self):
        res = gain_at_zero(SequenceConfig(n_atoms=100))
        assert res.gain == pytest.approx(1.0, rel=1e-12)
        assert res.delta_theta == pytest.approx(0.1, rel=1e-12)
        assert res.xi == pytest.approx(1.0, rel=1e-12)

    def test_linear_gain_near_cube_root(self):
        # tau at the squeezing optimum, no interrogation twisting
        from braggtrap.optimize import alpha_H

        alpha = alpha_H(1000, 0.012, OptimizationSpec(refine_tolerance=1e-7))
        res = gain_at_zero(SequenceConfig(n_atoms=1000, tau=0.012, alpha=alpha))
        assert res.gain == pytest.approx(10.0, rel=0.15)
        assert res.gain == pytest.approx(1.0 / math.sqrt(xi2_closed(1000, 0.012)), rel=1e-6)

    def test_weak_regime_matches_first_order(self):
        # residual against the first-order gain shrinks ~4x per halving
        n, alpha, beta = 100, 0.0, 0.3
        residuals = []
        for scale in (1.0, 0.5, 0.25):
            tau = 1e-4 * scale
            res = gain_at_zero(SequenceConfig(n_atoms=n, tau=tau, tau_tilde=tau,
                                              alpha=alpha, beta=beta))
            residuals.append(abs(res.gain**2 - weak_gain(n, tau, tau, alpha, beta)))
        assert residuals[0] / residuals[1] >= 3.5
        assert residuals[1] / residuals[2] >= 3.5

    def test_gain_consistency_identity(self):
        res = gain_at_zero(SequenceConfig(n_atoms=400, tau=0.01, tau_tilde=0.001,
                                          alpha=0.3, beta=0.2))
        assert res.delta_theta * math.sqrt(400) * res.gain == pytest.approx(1.0, rel=1e-12)


class TestSensitivity:
    def test_shot_noise_at_zero(self):
        res = sensitivity(SequenceConfig(n_atoms=64))
        assert res.delta_theta == pytest.approx(1.0 / 8.0, rel=1e-12)

    def test_insensitive_point_raises(self):
        with pytest.raises(FlatSlopeError):
            sensitivity(SequenceConfig(n_atoms=10, theta=math.pi / 2))

    def test_sub_shot_noise_optimized(self):
        seq = SequenceConfig(n_atoms=500, tau=0.01, tau_tilde=0.002)
        spec = OptimizationSpec(alpha_grid=40, beta_grid_joint=40)
        best = optimize_alpha_beta(seq, spec)
        res = sensitivity(replace(seq, alpha=best.alpha, beta=best.beta))
        assert res.delta_theta < 1.0 / math.sqrt(500)
        assert res.gain > 1.0

    def test_finite_difference_matches_analytic(self):
        # |FD slope - (-cos(beta) <S_x>_out)| <= 1e-6 relative at theta = 0
        for cfg in (
            SequenceConfig(n_atoms=50, tau=0.05, tau_tilde=0.01, alpha=0.4, beta=0.2),
            SequenceConfig(n_atoms=500, tau=0.008, tau_tilde=0.001, alpha=-0.6, beta=0.5),
        ):
            sx, _, _ = output_moments(cfg)
            analytic = -math.cos(cfg.beta) * sx
            h = 1e-5
            _, up, _ = output_moments(replace(cfg, theta=h))
            _, dn, _ = output_moments(replace(cfg, theta=-h))
            fd = (up - dn) / (2.0 * h)
            assert fd == pytest.approx(analytic, rel=1e-6)

    def test_general_theta_uses_finite_difference(self):
        cfg = SequenceConfig(n_atoms=40, theta=0.7)
        res = sensitivity(cfg)
        # pure rotation: slope is -S cos(theta), variance frozen at S/2
        assert res.d_sz_d_theta == pytest.approx(-20.0 * math.cos(0.7), rel=1e-6)


class TestSignalCurve:
    def test_sinusoid(self):
        rows = signal_curve(SequenceConfig(n_atoms=30), np.linspace(-math.pi, math.pi, 25))
        for theta, sz, var in rows:
            assert sz == pytest.approx(-15.0 * math.sin(theta), abs=1e-9)
            # rotated coherent state: Var S_z = (S/2) cos^2(theta)
            assert var == pytest.approx(7.5 * math.cos(theta) ** 2, abs=1e-9)

    def test_periodicity_without_interrogation_twist(self):
        cfg = SequenceConfig(n_atoms=21, tau=0.05, alpha=0.3, beta=-0.2)
        lo = signal_curve(cfg, [0.4])[0]
        hi = signal_curve(cfg, [0.4 + 2.0 * math.pi])[0]
        assert lo[1] == pytest.approx(hi[1], abs=1e-10)
        assert lo[2] == pytest.approx(hi[2], abs=1e-10)

    def test_spin_bound(self):
        cfg = SequenceConfig(n_atoms=16, tau=0.2, tau_tilde=0.1, alpha=1.0, beta=0.5)
        rows = signal_curve(cfg, np.linspace(0.0, 2.0 * math.pi, 40))
        assert max(abs(sz) for _, sz, _ in rows) <= 8.0 + 1e-12

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            signal_curve(SequenceConfig(n_atoms=4), [])


class TestWeakCancellation:
    def test_equal_twists_cancel_at_first_order(self):
        # with tau_tilde = tau and alpha = 0 the first-order gain term
        # vanishes, so G^2 - 1 must shrink faster than tau
        n = 100
        excesses = []
        for tau in (4e-4, 2e-4, 1e-4):
            res = gain_at_zero(SequenceConfig(n_atoms=n, tau=tau, tau_tilde=tau))
            excesses.append(abs(res.gain**2 - 1.0))
        assert excesses[0] / excesses[1] >= 3.5
        assert excesses[1] / excesses[2] >= 3.5


class TestSequenceFromTrap:
    def test_builder_wires_trap_physics(self):
        trap = AtomTrapConfig(omega_z_tilde=2.0 * math.pi * 80.0, oscillations=1.5)
        seq = sequence_from_trap(trap, model="gaussian", alpha=0.1, beta=-0.2)
        assert seq.n_atoms == trap.n_atoms
        assert seq.tau == pytest.approx(
            tau_accumulated(trap, "gaussian", 1.5 * trap.period), rel=1e-12
        )
        assert seq.tau_tilde == pytest.approx(tau_tilde(trap, "gaussian"), rel=1e-12)
        assert seq.theta == pytest.approx(gravity_phase(trap), rel=1e-12)
        assert seq.alpha == 0.1
        assert seq.beta == -0.2
