import math

import numpy as np
import pytest

from robinstab.errors import DelayOutOfBounds, ValidationError
from robinstab.iss import fit_decay
from robinstab.sim import (
    PulsedDisturbance, Separable, SinusoidalDelay, disturbance_shape, fd_oracle, fd_system,
    benchmark_history, benchmark_history_shape, paper_scenario, reconstruct, simulate,
)
from robinstab.spectral import PlantParams, compute_spectrum, gauss_legendre, project


def gl_nodes(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


@pytest.fixture(scope="module")
def short_run():
    sc = paper_scenario().with_(horizon=6.0)
    return sc, simulate(sc)


# ------------------------------------------------------------- scenario data

def test_history_midpoint_value():
    assert benchmark_history()(0.0, 0.5) == pytest.approx(-0.5, abs=1e-15)
    assert benchmark_history_shape(0.5) == pytest.approx(-0.5)


def test_delay_bounds():
    h = SinusoidalDelay(2.0, 1.5)
    assert h.bounds == (0.5, 3.5)
    t = np.linspace(0, 2 * math.pi, 100001)
    assert h(t).min() == pytest.approx(0.5, abs=1e-9)
    assert h(t).max() == pytest.approx(3.5, abs=1e-9)


def test_disturbance_profile():
    d = PulsedDisturbance()
    assert d(5.0) == 0.0
    assert d(10.0) == pytest.approx(5.0)
    assert d(19.0) < 1e-30
    assert d(20.5) == pytest.approx(1 + 0.5 * math.sin(61.5))


def test_disturbance_shape_projection(spectrum, params):
    coef = project(disturbance_shape, spectrum)
    for pair, got in zip(spectrum.pairs, coef):
        r = pair.r
        exact = ((1 - math.cos(r)) / r + params.h1 * (r - math.sin(r)) / r ** 2) / pair.norm_phi
        assert got == pytest.approx(exact, abs=1e-12)


def test_separable_scaling():
    f = benchmark_history().scaled(2.0)
    assert f(-1.0, 0.5) == pytest.approx(2 * 4 * -0.5)
    assert f.time_deriv(np.array([-1.0]))[0] == pytest.approx(2 * -2 * 2)


# -------------------------------------------------------------- simulation

def test_trajectory_shapes(short_run):
    sc, tr = short_run
    n_t = sc.n_steps + 1
    assert tr.modal_states.shape == (n_t, 30)
    assert tr.inputs.shape == (n_t, 2)
    assert tr.times[-1] == pytest.approx(6.0)
    np.testing.assert_allclose(tr.inputs, tr.modal_states[:, :2] @ sc.design.K.T)


def test_initial_state_is_projected_history(short_run, spectrum):
    sc, tr = short_run
    np.testing.assert_allclose(tr.modal_states[0], project(benchmark_history_shape, spectrum),
                               atol=1e-13)


def test_reconstruction_at_zero_within_tail(short_run, spectrum):
    _, tr = short_run
    x, w = gauss_legendre(512)
    resid = reconstruct(tr, spectrum, x, [0])[0] - benchmark_history_shape(x)
    tail = np.sum(project(benchmark_history_shape, compute_spectrum(spectrum.params, 400),
                          n_nodes=2048)[30:] ** 2)
    assert w @ resid ** 2 == pytest.approx(tail, rel=1e-3)


def test_reconstruct_single_mode(short_run, spectrum):
    _, tr = short_run
    x = np.linspace(0, 1, 11)
    one = type(tr)(**{**tr.__dict__, "modal_states": tr.modal_states * np.eye(30)[0]})
    np.testing.assert_allclose(reconstruct(one, spectrum, x),
                               np.outer(tr.modal_states[:, 0], spectrum.basis(x, 1)[0]))
    with pytest.raises(ValidationError):
        reconstruct(tr, spectrum, [1.5])


def test_parseval_101_nodes(short_run, spectrum):
    _, tr = short_run
    x, w = gl_nodes(101)
    y = reconstruct(tr, spectrum, x)
    np.testing.assert_allclose((y ** 2) @ w, tr.state_norm ** 2, rtol=1e-6)


def test_undisturbed_decay(undisturbed_runs):
    design, tr = undisturbed_runs["both"]
    i8 = int(np.argmin(np.abs(tr.times - 8.0)))
    assert tr.state_norm[i8] <= 0.05 * tr.history_sup_norm
    assert fit_decay(tr, (2.0, 8.0)) >= design.kappa
    # Once the transient has passed the norm keeps shrinking over each delay window.
    late = tr.state_norm[tr.times >= 4.0]
    step = int(round(3.5 / (tr.times[1] - tr.times[0])))
    assert np.all(late[step::step] < late[:-step:step])


def test_disturbance_response_is_bounded():
    tr = simulate(paper_scenario())
    assert np.all(np.isfinite(tr.state_norm))
    assert tr.disturbance_norm[tr.times < 8].max() == 0
    assert tr.state_norm[tr.times > 25].max() < 2 * tr.disturbance_norm.max()


def test_scenario_validation(params):
    sc = paper_scenario(disturbance=False)
    with pytest.raises(DelayOutOfBounds):
        simulate(sc.with_(delay_fn=SinusoidalDelay(2.0, 2.0), horizon=1.0))
    with pytest.raises(ValidationError):
        simulate(sc.with_(dt=0.0))
    with pytest.raises(ValidationError):
        simulate(sc.with_(n_modes=1))
    with pytest.raises(ValidationError):
        simulate(sc.with_(dt=0.6, horizon=2.0))


def test_csv_round_trip_and_determinism(tmp_path, short_run, spectrum):
    _, tr = short_run
    tr.to_csv(tmp_path / "a.csv", stride=100)
    tr.to_csv(tmp_path / "b.csv", stride=100)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    data = np.genfromtxt(tmp_path / "a.csv", delimiter=",", names=True)
    assert data.dtype.names[:5] == ("t", "h", "u1", "u2", "norm")
    np.testing.assert_allclose(data["norm"], tr.state_norm[::100], rtol=1e-11)
    tr.field_to_csv(tmp_path / "f.csv", spectrum, np.linspace(0, 1, 5), stride=1000)
    rows = (tmp_path / "f.csv").read_text().splitlines()
    assert rows[0] == "t,x,y" and len(rows) == 1 + 7 * 5


def test_general_disturbance_matches_separable():
    sc = paper_scenario().with_(horizon=12.0, n_modes=8)
    sep = sc.disturbance_fn
    general = sc.with_(disturbance_fn=lambda t, x: sep(t, x))
    a, b = simulate(sc), simulate(general)
    np.testing.assert_allclose(b.modal_states, a.modal_states, atol=1e-12)
    np.testing.assert_allclose(b.disturbance_norm, a.disturbance_norm, rtol=1e-12)


# ------------------------------------------------------- finite differences

def test_fd_slowest_mode():
    p = PlantParams(0.2, 2.0, 0.0, math.pi / 4, math.pi / 4, 0.5, 3.5)
    lam1 = compute_spectrum(p, 1).lam[0]
    fd_lam = np.linalg.eigvals(fd_system(p, 256).matrix()).real.max()
    assert abs(fd_lam - lam1) <= 1e-3


def test_fd_oracle_tracks_modal_solution():
    sc = paper_scenario().with_(horizon=4.0)
    modal = simulate(sc)
    fd = fd_oracle(sc, 128)
    gap = np.abs(modal.state_norm - fd.state_norm).max() / modal.state_norm.max()
    assert gap <= 2e-2
    np.testing.assert_allclose(fd.inputs, modal.inputs, atol=2e-2 * np.abs(modal.inputs).max())


def test_fd_oracle_rejects_coarse_grid_and_general_disturbance():
    sc = paper_scenario().with_(horizon=1.0)
    with pytest.raises(ValidationError):
        fd_oracle(sc, 32)
    with pytest.raises(ValidationError):
        fd_oracle(sc.with_(disturbance_fn=lambda t, x: 0 * x), 64)


def test_non_separable_history():
    sc = paper_scenario(disturbance=False).with_(horizon=2.0, n_modes=10)
    h = benchmark_history()
    general = sc.with_(history_fn=lambda t, x: h(t, x))
    a, b = simulate(sc), simulate(general)
    # Numerical time derivatives of the history differ slightly from the exact ones.
    np.testing.assert_allclose(b.state_norm, a.state_norm, rtol=1e-6)
    assert isinstance(sc.history_fn, Separable)
