import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from timescales.dist import DriftDiffusion, histogram, stationary_density
from timescales.errors import ParameterError, StabilityError
from timescales.synth import (
    SyntheticSpec,
    _fgn_circulant,
    _fgn_hosking,
    default_dt,
    fgn_autocov,
    gen_fbm,
    gen_fgn,
    gen_iid,
    gen_vol_cluster,
    make_rng,
    simulate_sde,
)


def test_gaussian_kurtosis():
    x = gen_iid(SyntheticSpec("gaussian_iid", 10**5, 3)).values
    assert -0.1 < stats.kurtosis(x) < 0.1


def test_student_t_unit_variance():
    x = gen_iid(SyntheticSpec("student_t_iid", 10**5, 3, {"nu": 5})).values
    assert abs(x.var() - 1) < 0.05


def test_student_t_tail_ratio():
    # P(|x|>u) of unit-variance t(3) decays like u^-3; the exact ratio comes from scipy
    s = math.sqrt(3.0)
    expected = stats.t.sf(5 * s, 3) / stats.t.sf(10 * s, 3)
    x = np.abs(gen_iid(SyntheticSpec("student_t_iid", 10**5, 0, {"nu": 3})).values)
    ratio = np.mean(x > 5) / np.mean(x > 10)
    assert expected / 1.5 < ratio < expected * 1.5


def test_spec_validation():
    with pytest.raises(ParameterError):
        SyntheticSpec("student_t_iid", 100, 0, {"nu": 2.0})
    with pytest.raises(ParameterError):
        SyntheticSpec("fbm", 100, 0, {"H": 1.0})
    with pytest.raises(ParameterError):
        SyntheticSpec("fbm", 1, 0, {"H": 0.5})
    with pytest.raises(ParameterError):
        SyntheticSpec("levy", 100)


@pytest.mark.parametrize(
    "spec",
    [
        SyntheticSpec("gaussian_iid", 1000, 11),
        SyntheticSpec("student_t_iid", 1000, 11, {"nu": 4}),
        SyntheticSpec("vol_cluster", 1000, 11, {"phi": 0.9, "sigma_v": 0.3}),
    ],
)
def test_determinism_and_seed_independence(spec):
    gen = gen_vol_cluster if spec.model == "vol_cluster" else gen_iid
    a, b = gen(spec).values, gen(spec).values
    np.testing.assert_array_equal(a, b)
    other = SyntheticSpec(spec.model, spec.n, spec.seed + 1, spec.params)
    c = gen(other).values
    assert abs(np.corrcoef(a, c)[0, 1]) < 5 / math.sqrt(spec.n)


def test_fbm_determinism_and_seeds():
    spec = SyntheticSpec("fbm", 4096, 5, {"H": 0.7})
    a = gen_fbm(spec)
    np.testing.assert_array_equal(a, gen_fbm(spec))
    b = gen_fbm(SyntheticSpec("fbm", 4096, 6, {"H": 0.7}))
    assert abs(np.corrcoef(np.diff(a), np.diff(b))[0, 1]) < 5 / math.sqrt(4095)


def test_fbm_starts_at_zero():
    path = gen_fbm(SyntheticSpec("fbm", 100, 0, {"H": 0.3}))
    assert path.size == 100 and path[0] == 0.0


def test_brownian_increments_uncorrelated():
    n = 2**16
    inc = np.diff(gen_fbm(SyntheticSpec("fbm", n, 2, {"H": 0.5})))
    rho = np.corrcoef(inc[:-1], inc[1:])[0, 1]
    assert abs(rho) < 3 / math.sqrt(n)


@pytest.mark.parametrize("H,sign", [(0.3, -1), (0.7, 1)])
def test_increment_correlation_sign(H, sign):
    rhos = []
    for seed in range(200):
        inc = np.diff(gen_fbm(SyntheticSpec("fbm", 1024, seed, {"H": H})))
        rhos.append(np.corrcoef(inc[:-1], inc[1:])[0, 1])
    assert np.sign(np.mean(rhos)) == sign
    assert np.mean(np.sign(rhos) == sign) > 0.95


def test_fbm_variance_scaling():
    # 1000 paths: at 200 the slope's sampling sd (~0.025) is half the tolerance
    H, n = 0.7, 2**14
    t = 2 ** np.arange(2, 14)
    paths = np.array([gen_fbm(SyntheticSpec("fbm", n, s, {"H": H}))[t] for s in range(1000)])
    var = (paths**2).mean(axis=0)
    slope = np.polyfit(np.log(t), np.log(var), 1)[0]
    assert abs(slope - 2 * H) < 0.05


@pytest.mark.parametrize("H", [0.3, 0.5, 0.7])
def test_fbm_covariance(H):
    paths = np.array([gen_fbm(SyntheticSpec("fbm", 257, s, {"H": H})) for s in range(600)])
    for s, t in [(64, 128), (128, 256)]:
        prod = paths[:, s] * paths[:, t]
        exact = 0.5 * (s ** (2 * H) + t ** (2 * H) - abs(t - s) ** (2 * H))
        se = prod.std(ddof=1) / math.sqrt(prod.size)
        assert abs(prod.mean() - exact) < 5 * se


@pytest.mark.parametrize("H", [0.2, 0.5, 0.8])
def test_hosking_matches_circulant_covariance(H):
    m = 32
    c = np.array([_fgn_circulant(H, m, make_rng(s)) for s in range(2000)])
    h = np.array([_fgn_hosking(H, m, make_rng(s)) for s in range(2000)])
    exact = fgn_autocov(H, 2)
    for x in (c, h):
        emp = [np.mean(x[:, 10] * x[:, 10 + k]) for k in range(3)]
        np.testing.assert_allclose(emp, exact, atol=0.1)


def test_fgn_method_selection():
    a = gen_fgn(0.6, 64, 1, "hosking")
    b = gen_fgn(0.6, 64, 1, "circulant")
    assert a.shape == b.shape == (64,)
    with pytest.raises(ParameterError):
        gen_fgn(0.0, 64, 1)


def test_vol_cluster_sigma_zero_is_gaussian():
    x = gen_vol_cluster(SyntheticSpec("vol_cluster", 10**5, 4, {"phi": 0.98, "sigma_v": 0.0})).values
    assert abs(stats.kurtosis(x)) < 0.1
    assert abs(np.corrcoef(np.abs(x[:-1]), np.abs(x[1:]))[0, 1]) < 5 / math.sqrt(x.size)


def test_vol_cluster_clustering():
    r = gen_vol_cluster(SyntheticSpec("vol_cluster", 10**5, 4, {"phi": 0.98, "sigma_v": 0.2}))
    a = np.abs(r.values)
    assert r.normalized
    assert np.corrcoef(a[:-1], a[1:])[0, 1] > 0.1


def test_vol_cluster_nonstationary():
    with pytest.raises(ParameterError):
        gen_vol_cluster(SyntheticSpec("vol_cluster", 100, 0, {"phi": 1.0}))


def test_ou_variance():
    x = simulate_sde("i", D=2.0, n=10**6, seed=1)
    assert abs(x.var() - 1.0) < 0.05


def test_ou_unstable_step():
    with pytest.raises(StabilityError):
        simulate_sde("i", dt=2.5, n=100)


def test_empty_path():
    assert simulate_sde("iii", nu=3, n=0).size == 0
    assert simulate_sde("i", n=0).size == 0


def test_sde_deterministic():
    np.testing.assert_array_equal(simulate_sde("iii", nu=3, n=5000, seed=9), simulate_sde("iii", nu=3, n=5000, seed=9))


def test_sde_too_coarse_step():
    with pytest.raises(StabilityError):
        simulate_sde("iii", nu=3, dt=5.0, n=20000)


@pytest.mark.parametrize("nu", [3.0, 5.0])
def test_sde_case_iii_stationary(nu):
    x = simulate_sde("iii", nu=nu, n=10**6, seed=2)
    h = histogram(x, 0.25, 10)
    ref = stationary_density(DriftDiffusion("iii", nu=nu), h.centers)
    assert np.max(np.abs(h.density - ref)) < 0.02


def test_default_dt_bound():
    for nu in (2.5, 3.0, 5.0, 10.0):
        dd = DriftDiffusion("iii", nu=nu)
        assert default_dt(dd) * abs(dd.coupling - 0.5) * 2 / nu <= 0.1
    assert default_dt(DriftDiffusion("i")) <= 0.1


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["gaussian_iid", "student_t_iid"]), st.integers(2, 500), st.integers(0, 2**63))
def test_iid_shape_and_repeatability(model, n, seed):
    spec = SyntheticSpec(model, n, seed, {"nu": 4.0} if model == "student_t_iid" else {})
    a = gen_iid(spec)
    assert len(a) == n and np.all(np.isfinite(a.values))
    np.testing.assert_array_equal(a.values, gen_iid(spec).values)
