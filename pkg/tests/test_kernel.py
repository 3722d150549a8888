import numpy as np
import pytest
from mpmath import mp

from pslab.context import ValidationError
from pslab.kernel import (
    default_kernel,
    dump_kernel_csv,
    eval_K_tau,
    eval_K_tau_hat,
    hat_tail_mass,
    make_kernel,
    parseval_residual,
    tail_threshold,
)

KERN = default_kernel()


def test_sandwich_on_table():
    x, K = KERN.x_grid, KERN.K_table
    assert np.all(K >= 0.0) and np.all(K <= 1.0 + 1e-12)
    assert np.all(K[np.abs(x) <= 0.25] >= 0.25 - 1e-12)
    assert np.all(K[np.abs(x) >= 1.0] == 0.0)


def test_hat_nonnegative_and_decaying():
    hat = KERN.hat_table
    assert np.all(hat >= 0.0)
    assert hat_tail_mass(KERN, 40.0) < 1e-9
    t1 = tail_threshold(KERN, 1e-6)
    t2 = tail_threshold(KERN, 1e-10)
    assert t1 < t2


def test_hat_matches_direct_fourier_integral():
    # Khat(t) = int K(x) e(-t x) dx, checked against mpmath quadrature
    for t in (0.0, 1.3, 3.7):
        with mp.workprec(80):
            want = mp.quad(
                lambda x: mp.mpf(float(KERN.K(float(x)))) * mp.cos(2 * mp.pi * t * x),
                mp.linspace(-1, 1, 9),
            )
        assert float(KERN.hat(t)) == pytest.approx(float(want), abs=5e-8)


def test_scaled_kernel_identities():
    tau = 0.25
    assert eval_K_tau(0.1, tau, KERN) == pytest.approx(float(KERN.K(0.4)))
    assert eval_K_tau(0.3, tau, KERN) == 0.0
    assert eval_K_tau_hat(2.0, tau, KERN) == pytest.approx(tau * float(KERN.hat(0.5)))
    with pytest.raises(ValidationError):
        eval_K_tau(0.1, 0.0, KERN)


def test_parseval():
    assert parseval_residual(KERN) < 1e-10


def test_construction_validation_and_csv():
    with pytest.raises(ValidationError):
        make_kernel(grid_points=100)
    with pytest.raises(ValidationError):
        make_kernel(transition_sharpness=-1.0)
    kcsv, hcsv = dump_kernel_csv(KERN)
    assert kcsv.startswith("x,K\n") and hcsv.startswith("t,Khat\n")
