import numpy as np
import pytest

from helmneumann.bem_oracle import (
    boundary_pair_smooth,
    boundary_trace,
    neumann_evaluator,
    normal_derivative_on_boundary,
)
from helmneumann.geometry import Disk, DiskDomain
from helmneumann.special_functions import DomainError, gamma_k

TWO = DiskDomain((Disk((0, 0), 1.0), Disk((3, 0.5), 0.7)), 1.0)


@pytest.fixture(scope="module")
def two_disk():
    return neumann_evaluator(TWO, 256)


@pytest.fixture(scope="module")
def unit_disk():
    return neumann_evaluator(DiskDomain((Disk((0, 0), 1.0),), 1.0), 64)


def _random_exterior(rng, dom, n):
    out = []
    while len(out) < n:
        p = rng.uniform(-2.5, 4.5, 2)
        if not dom.contains(p[None, :])[0] and min(
                np.hypot(*(p - d.zeta)) - d.radius for d in dom.disks) > 0.1:
            out.append(p)
    return np.array(out)


def test_unit_disk_boundary_condition(unit_disk):
    res = normal_derivative_on_boundary(unit_disk, [3.0, 0.0], 0)
    assert np.max(np.abs(res)) <= 1e-6


def test_two_disk_boundary_condition(two_disk):
    for z in ([1.5, -1.2], [-1.3, 0.8]):
        for i in range(2):
            assert np.max(np.abs(normal_derivative_on_boundary(two_disk, z, i))) <= 1e-5


def test_empty_domain_is_free_space():
    ev = neumann_evaluator(DiskDomain((), 1.0))
    z, x = np.array([0.1, 0.2]), np.array([1.1, 0.2])
    assert ev.eval(z, x) == gamma_k(1.0, z, x)
    assert abs(ev.eval(z, x) - (0.0220642410539 - 0.1912994216395j)) < 1e-12


@pytest.mark.parametrize("k", [0.5, 1.0, 3.0])
def test_matches_separation_of_variables(exact_disk, k):
    ev = neumann_evaluator(DiskDomain((Disk((0, 0), 1.0),), k), 256)
    for z, x in (([3.0, 0.0], [-1.5, 1.0]), ([1.2, 0.4], [0.0, -2.0])):
        assert abs(ev.eval(z, x) - exact_disk(k, 1.0, z, x)) <= 1e-10


def test_symmetry_random_pairs(two_disk):
    pts = _random_exterior(np.random.default_rng(1), TWO, 20)
    for z, x in zip(pts[:10], pts[10:]):
        assert abs(two_disk.eval(z, x) - two_disk.eval(x, z)) <= 1e-6


def test_gradient_finite_differences(unit_disk):
    z, x = np.array([3.0, 0.0]), np.array([-1.2, 1.4])
    g = unit_disk.eval_grad(z, x)
    h, e = 1e-5, np.eye(2)
    fd = np.array([(unit_disk.eval(z, x + h * e[a]) - unit_disk.eval(z, x - h * e[a])) / (2 * h)
                   for a in range(2)])
    assert np.max(np.abs(fd - g)) <= 1e-6 * np.max(np.abs(g))


def test_hessian_helmholtz(two_disk):
    z, x = np.array([1.5, -1.2]), np.array([-1.3, 0.8])
    H = two_disk.eval_hessian(z, x)
    assert abs(np.trace(H) + two_disk.eval(z, x)) <= 1e-6 * abs(two_disk.eval(z, x))


def _radiation(ev, z, rho):
    d = np.array([np.cos(0.7), np.sin(0.7)])
    x = rho * d
    return abs(ev.scattered(z, x, tdirs=[d])[0, 0] - 1j * ev.k * ev.scattered(z, x)[0, 0])


def test_radiation_decay_rate(two_disk):
    # an outgoing wave has (d_rho - i k) u ~ rho^(-3/2): factor 2^1.5 per doubling
    z = np.array([1.5, -1.2])
    for rho in (50.0, 100.0):
        ratio = _radiation(two_disk, z, rho) / _radiation(two_disk, z, 2 * rho)
        assert abs(ratio - 2 ** 1.5) < 0.05


@pytest.mark.xfail(strict=True, reason="the asymptotic doubling factor is 2^1.5 ~ 2.83 < 3")
def test_radiation_decay_factor_three(two_disk):
    z = np.array([1.5, -1.2])
    assert _radiation(two_disk, z, 50.0) / _radiation(two_disk, z, 100.0) >= 3


def test_convergence_in_nc():
    ref = neumann_evaluator(TWO, 2048)
    z, x = np.array([[1.5, -1.2]]), np.array([[-1.3, 0.8], [2.0, 2.0]])
    R = ref.field(z, x)
    errs = [np.abs(neumann_evaluator(TWO, nc).field(z, x) - R).max() for nc in (16, 32, 64)]
    assert errs[0] >= 2 * errs[1] and errs[1] >= 2 * errs[2]


def test_green_identity_reconstruction(two_disk):
    # N(z, x) = Gamma(z, x) - int d_nu Gamma(x, w) N(z, w) dsigma_w over all circles
    sysm = two_disk.system
    z, x = np.array([1.5, -1.2]), np.array([-1.3, 0.8])
    u = two_disk.densities(z[None, :])[:, 0]
    from helmneumann.special_functions import gamma_derivatives
    disp = sysm.nodes - x
    dn = np.einsum("ic,ic->i", gamma_derivatives(1.0, disp, 1)[1], sysm.normals)
    rebuilt = gamma_k(1.0, z, x) - np.sum(dn * u * sysm.weights)
    assert abs(rebuilt - two_disk.eval(z, x)) <= 1e-6


def test_far_source_trace_is_smooth(unit_disk):
    tr = boundary_trace(unit_disk, [3.0, 0.0], 0, 16)
    assert np.all(tr.singular == 0) and np.allclose(tr.smooth, tr.values)


def test_mirror_traces(unit_disk):
    a = boundary_trace(unit_disk, [1.0, 2.0], 0, 32)
    b = boundary_trace(unit_disk, [1.0, -2.0], 0, 32)
    # reflection across the x1 axis maps angle t to -t; grid index j to (n - j) % n
    idx = (-np.arange(32)) % 32
    assert np.max(np.abs(a.values - b.values[idx])) <= 1e-8


def test_on_boundary_pair_smooth_is_bounded(unit_disk):
    P = boundary_pair_smooth(unit_disk, 0, 16)
    assert np.all(np.isfinite(P)) and np.max(np.abs(P)) < 10
    assert np.allclose(P, P.T, atol=1e-8)


def test_points_inside_rejected(two_disk):
    with pytest.raises(DomainError):
        two_disk.eval([0.0, 0.0], [5.0, 5.0])
    with pytest.raises(DomainError):
        boundary_trace(two_disk, [1.0, 0.0], 0, 16)


def test_condition_reported(two_disk):
    assert np.isfinite(two_disk.system.condition) and two_disk.system.condition > 1
