import numpy as np
import pytest

from downgrading.errors import RegimeError
from downgrading.loss import (
    admissible_rate_window,
    compare,
    erlang_fixed_point,
    sweep_rate,
)
from downgrading.model import ModelParams

from test_acceptance import random_loss_instance


def test_video_erlang(video):
    beta = erlang_fixed_point(video)
    assert beta == pytest.approx(np.sqrt(1 / 1.4), abs=1e-11)
    r = compare(video, [0.95])[0]
    assert r.acceptance[1] == pytest.approx(1 / 1.4, abs=1e-11)
    assert r.loss_fraction[1] == pytest.approx(1 - 1 / (2 * 0.7), abs=1e-11)


def test_boundary_beta_is_one():
    p = ModelParams(A=(1, 2), lam=(0.2, 0.4), mu=(1, 1), c=1.0, c0=0.5)
    assert p.A_rho == pytest.approx(1.0)
    assert erlang_fixed_point(p) == 1.0


def test_cubic_example():
    p = ModelParams(A=(1, 3), lam=(0.2, 0.4), mu=(1, 1), c=1.0, c0=0.9)
    beta = erlang_fixed_point(p)
    real = [r.real for r in np.roots([1.2, 0, 0.2, -1]) if abs(r.imag) < 1e-12 and 0 < r.real < 1]
    assert beta == pytest.approx(real[0], abs=1e-11)


def test_random_instances():
    rng = np.random.default_rng(17)
    for _ in range(50):
        p = random_loss_instance(rng)
        beta = erlang_fixed_point(p)
        assert abs((p.A * p.rho * beta ** p.A.astype(float)).sum() - p.c) < 1e-10
        r = compare(p, [p.c0])[0]
        assert r.W_D <= r.W_L


def test_w_d_vanishes_at_lower_edge(video):
    r = compare(video, [0.7 + 1e-9])[0]
    assert r.W_D < 1e-8


def test_beta_decreasing_in_rates(three):
    for j in range(three.J):
        lam = three.lam.copy()
        betas = []
        for v in np.linspace(0.2, 0.8, 7):
            lam[j] = v
            betas.append(erlang_fixed_point(three.replace(lam=lam, c0=0.5)))
        assert np.all(np.diff(betas) < 0)


def test_fig2a_window_and_sweep():
    p = ModelParams(A=(1, 3), lam=(0.2, 0.5), mu=(1, 1), c=1.0, c0=0.99)
    lo, hi = admissible_rate_window(p, 1, 0.99)
    assert lo == pytest.approx(0.79 / 3) and hi == pytest.approx(0.79)
    rows = sweep_rate(p, 1, np.linspace(lo + 1e-3, hi - 1e-3, 30), 0.99)
    assert all(wd <= wl for _, _, wl, wd in rows)


def test_out_of_window_c0_is_rejected(video):
    with pytest.raises(RegimeError):
        compare(video, [0.6])
    with pytest.raises(RegimeError):
        compare(video, [1.0])
    p = ModelParams(A=(1, 2, 3), lam=(0.2, 0.2, 0.05), mu=(1, 1, 1), c=1.0, c0=0.99)
    with pytest.raises(RegimeError):
        compare(p, [0.99])
