import json
import math

import numpy as np
import pytest

import rgrst


def reference():
    return rgrst.RgrstParams.single(2.96, 0.81, 0.02)


def test_density_matches_likelihood():
    m = rgrst.RgrstModel(reference())
    y = np.array([3.0, 40.0])
    t = np.array([1.5, 0.7])
    dens = m.joint_density(y, t)
    assert dens.shape == (2,)
    assert rgrst.log_likelihood(reference(), y, t) == pytest.approx(np.log(dens).sum(), rel=1e-12)
    assert 0.9 < m.total_mass() < 1.0


def test_simulation_is_seeded():
    a = rgrst.simulate(reference(), 500, seed=3)
    b = rgrst.simulate(reference(), 500, seed=3)
    assert np.array_equal(a["T"], b["T"])
    assert np.allclose(a["Y_T"], a["y0"] * np.exp(a["T"]))
    assert len(a["censored"]) == 500


def test_fit_and_tests():
    sim = rgrst.simulate(reference(), 1500, seed=5)
    keep = (sim["T"] > 0) & ~np.array(sim["censored"])
    y, t = sim["Y_T"][keep], sim["T"][keep]
    report = json.loads(rgrst.fit(y, t, dims="1:1", starts=3))
    assert report["schema_version"] == 1
    assert report["k"] == 3
    mu = next(e["value"] for e in report["base"] if e["name"] == "mu_1")
    assert abs(mu - 2.96) < 0.4
    chi = rgrst.chi_square(reference(), y, t)
    assert chi["los"]["dof"] > 0
    assert 0.0 <= chi["los"]["p_value"] <= 1.0


def test_kde_and_errors():
    v = rgrst.kde([0.0], 0.5, [0.0])
    assert v[0] == pytest.approx(1.0 / (0.5 * math.sqrt(2 * math.pi)))
    with pytest.raises(rgrst.DataError):
        rgrst.kde([], 0.5, [0.0])
    bad = rgrst.RgrstParams.single(1.0, -1.0, 0.0)
    with pytest.raises(rgrst.ParameterError):
        rgrst.RgrstModel(bad)
