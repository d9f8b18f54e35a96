import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from helmneumann import design
from helmneumann.bem_oracle import boundary_pair_smooth, neumann_evaluator
from helmneumann.design import (
    DesignError,
    DesignParams,
    LayeredEvaluator,
    _argmin_tiebreak,
    assemble_linear_system,
    design_loop,
    error_e,
    grow_until_stall,
    inverse_target_transform,
    load_matrix,
    place_disk,
    predicted_errors,
    propose_center,
    read_history,
    replay,
    save_matrix,
    scattering_matrix,
    start_run,
    target_transform,
)
from helmneumann.experiments import bem_scattering, four_disk_domain
from helmneumann.geometry import ConfigError, Disk, DiskDomain, SourceLine

DATA = __import__("pathlib").Path(__file__).parent / "data"
CENTER = (0.43, 0.37)


def test_empty_domain_scattering_is_zero():
    sm = scattering_matrix(LayeredEvaluator(1.0), SourceLine(16))
    assert np.all(sm.S == 0)
    sm = bem_scattering(DiskDomain((), 1.0))
    assert np.all(sm.S == 0)


def test_four_disk_golden():
    sm = bem_scattering(four_disk_domain())
    golden = load_matrix(DATA / "four_disk_S.json")
    assert np.all(np.isfinite(sm.S))
    assert np.max(np.abs(sm.S - golden)) <= 1e-12
    assert np.max(np.abs(sm.companion - sm.companion.T)) <= 1e-6


def test_companion_diagonal_convention():
    sm = scattering_matrix(LayeredEvaluator(2.0), SourceLine(8))
    lm = np.log(1 / 9) - 2
    expected = (lm + np.log(1.0) + 0.5772156649015329) / (2 * np.pi) - 0.25j
    assert np.allclose(np.diag(sm.companion), expected, rtol=0, atol=1e-15)


def test_layered_matches_bem():
    k = 1.0
    d1, d2 = Disk((0.3, 0.4), 0.1), Disk((0.7, 0.5), 0.15)
    t1 = boundary_pair_smooth(neumann_evaluator(DiskDomain((d1,), k), 512), 0, 128)
    ev12 = neumann_evaluator(DiskDomain((d1, d2), k), 512)
    t2 = boundary_pair_smooth(ev12, 1, 128)
    lay = LayeredEvaluator(k).with_layer(d1, t1).with_layer(d2, t2)
    a = scattering_matrix(lay, SourceLine(16))
    b = scattering_matrix(ev12, SourceLine(16))
    assert np.max(np.abs(a.S - b.S)) <= 1e-8 * np.max(np.abs(b.S))
    assert np.max(np.abs(a.companion - b.companion)) <= 1e-8


def test_error_e_examples():
    S = np.arange(4.0).reshape(2, 2) + 0j
    assert error_e(S, S) == 0
    assert error_e(S, S + 1) == pytest.approx(1.0)
    assert error_e(S, S + np.array([[1, 0], [0, 1j]])) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        error_e(S, np.zeros((3, 3)))


@given(arrays(complex, (5, 5), elements=st.complex_numbers(max_magnitude=1e3, allow_nan=False,
                                                          allow_infinity=False)))
def test_target_transform_round_trip(A):
    assert np.max(np.abs(inverse_target_transform(target_transform(A)) - A)) <= 1e-14 * max(1, np.abs(A).max())


def test_target_transform_half_identity():
    assert np.all(target_transform(0.5 * np.eye(6)) == 0)


def test_assemble_linear_system():
    rng = np.random.default_rng(3)
    Nm = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)) + 4 * np.eye(8)
    S = rng.standard_normal((8, 8)) * 0.1
    res = assemble_linear_system(S, Nm, Nm[:, 0])
    assert np.allclose(res.intensities, np.eye(8)[0], atol=1e-12)
    b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    res = assemble_linear_system(S, Nm, b)
    assert res.residual <= 1e-8 and np.isfinite(res.u_residual)
    with pytest.raises(np.linalg.LinAlgError, match="singular values"):
        assemble_linear_system(S, np.ones((8, 8)), b)


def test_argmin_tiebreak():
    pts = np.array([[0.7, 0.5], [0.3, 0.5], [0.5, 0.6], [0.2, 0.9]])
    vals = np.array([1.0, 1.0, 1.0, 2.0])
    assert _argmin_tiebreak(vals, pts) == 1


def _single_target(radius, center=CENTER):
    return bem_scattering(DiskDomain((Disk(center, radius),), 1.0)).S


def test_propose_center_recovers_single_disk():
    run = start_run(_single_target(0.01))
    c, e_pred, (fx, fy) = propose_center(run)
    assert abs(c[0] - CENTER[0]) <= fx and abs(c[1] - CENTER[1]) <= fy
    actual = place_disk(run, c)
    # predicted and realized decrease of e agree within 30%
    assert abs((run.e - e_pred) - (run.e - actual.e)) <= 0.3 * (run.e - actual.e)


def test_predicted_matches_actual_elsewhere():
    run = start_run(_single_target(0.06))
    c = np.array([[0.6, 0.6]])
    e_pred = predicted_errors(run, c)[0]
    e_act = place_disk(run, c[0]).e
    assert abs((run.e - e_pred) - (run.e - e_act)) <= 0.3 * abs(run.e - e_act)


def test_grow_recovers_radius_and_rolls_back():
    run = place_disk(start_run(_single_target(0.06)), np.array(CENTER))
    grown = grow_until_stall(run)
    assert abs(grown.states[-1].r - 0.06) <= 0.01
    es = [h.e_after for h in grown.history]
    assert all(b < a for a, b in zip(es, es[1:]))
    # the rejected step leaves the snapshot untouched
    again = grow_until_stall(grown)
    assert again is grown
    assert np.array_equal(again.matrix.S, grown.matrix.S)


def test_grow_margin_is_stall():
    run = place_disk(start_run(_single_target(0.06)), np.array([0.5, 0.045]))
    with pytest.raises(DesignError):
        design.grow_step(run)
    assert grow_until_stall(run) is run


def test_zero_target_terminates_immediately():
    run = design_loop(np.zeros((16, 16)))
    assert run.e == 0 and run.domain.disks == () and run.history == ()


SMALL = DesignParams(grid=(10, 10), refine=2, nf=32, max_disks=2, max_steps=4)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    path = tmp_path_factory.mktemp("design") / "history.csv"
    target = _single_target(0.02, (0.55, 0.35))
    return target, design_loop(target, SMALL, history=path), path


def test_small_loop_monotone_and_bounded(small_run):
    target, run, _ = small_run
    assert 1 <= len(run.domain.disks) <= SMALL.max_disks
    assert len(run.history) <= SMALL.max_disks * (SMALL.max_steps + 1)
    es = [run.history[0].e_before] + [h.e_after for h in run.history]
    assert all(b < a for a, b in zip(es, es[1:]))


def test_history_replay_is_bit_identical(small_run):
    target, run, path = small_run
    records = read_history(path)
    assert len(records) == len(run.history)
    again = replay(target, SMALL, records)
    assert np.array_equal(again.matrix.S, run.matrix.S)
    assert again.domain == run.domain


def test_loop_uses_no_dense_solves(monkeypatch):
    target = _single_target(0.01)

    def forbidden(*a, **k):
        raise AssertionError("dense solve inside the design loop")

    for mod, name in ((np.linalg, "solve"), (np.linalg, "inv"), (scipy.linalg, "lu_factor"),
                      (scipy.linalg, "lu_solve"), (scipy.linalg, "solve")):
        monkeypatch.setattr(mod, name, forbidden)
    run = design_loop(target, DesignParams(grid=(8, 8), refine=2, nf=32, max_disks=1, max_steps=2))
    assert run.e < error_e(np.zeros_like(target), target)


def test_matrix_file_io(tmp_path):
    A = np.arange(9.0).reshape(3, 3) * (1 + 2j)
    save_matrix(tmp_path / "a.json", A)
    assert np.array_equal(load_matrix(tmp_path / "a.json"), A)
    (tmp_path / "bad.json").write_text('{"re": [[1, 2]], "im": [[0, 0]]}')
    with pytest.raises(ConfigError):
        load_matrix(tmp_path / "bad.json")
    (tmp_path / "broken.json").write_text('{"re": [\n')
    with pytest.raises(ConfigError, match="line"):
        load_matrix(tmp_path / "broken.json")
