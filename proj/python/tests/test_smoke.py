import json
import math

import pytest

import sumprod


def test_cantor_measure_and_convolutions():
    mu = sumprod.synth("cantor", m=10, depth=6)
    assert math.isclose(mu.mass, 1.0, rel_tol=1e-12)
    assert mu.centers().shape == (len(mu), 1)
    conv = sumprod.additive_convolve(mu, mu)
    assert math.isclose(conv.mass, 1.0, rel_tol=1e-12)
    xi = [7.25]
    assert abs(sumprod.transform_at(conv, xi) - sumprod.transform_at(mu, xi) ** 2) < 1e-10
    fast = sumprod.multiplicative_convolve(mu, mu, path="fast")
    slow = sumprod.multiplicative_convolve(mu, mu, path="pairwise")
    assert sumprod.total_variation(fast, slow) < 0.1


def test_nonconcentration_of_uniform():
    u = sumprod.synth("uniform", m=10)
    r = sumprod.nonconcentration(u, [0.25, 0.125, 0.0625, 0.03125], 2)
    assert abs(r["kappa_hat"] - 1) < 0.05


def test_point_mass_decay_and_flattening():
    pm = sumprod.point_mass(1, 8, [1.0])
    assert math.isclose(sumprod.decay_sup(pm, 2, 4 * pm.delta)["sup"], 1.0, rel_tol=1e-12)
    assert math.isclose(sumprod.flattening(pm, pm.delta, samples=16)["ratio"], 19 / 27, rel_tol=1e-12)


def test_lattice_oracles():
    a = [[i] for i in range(10)]
    assert sumprod.sumset_size(a, a) == 19
    assert sumprod.exact_energy([[0], [1], [2]], [[0], [1], [2]]) == 19


def test_schedule_is_exact():
    s = sumprod.schedule("2/5", 2, 1, "1/50", "1/4", 3)
    assert s["eps1"] == "29/1600"
    assert s["eps3"] == "1/300"
    assert s["r_chain"] == [1, 12, 1200]


def test_errors_map_to_python(tmp_path):
    with pytest.raises(ValueError):
        sumprod.synth("gaussian")
    with pytest.raises(sumprod.ConfigError):
        sumprod.run_experiment('{"schema": 1, "experiment": "decay", "measure": {"family": "cantor", "ratoi": 1}}', str(tmp_path))
    with pytest.raises(sumprod.DomainError):
        sumprod.decay_sup(sumprod.point_mass(1, 8, [0.25]), 1, 0.25)


def test_run_experiment_writes_manifest(tmp_path):
    cfg = {"schema": 1, "experiment": "oracle-suite", "instances": 5, "max_size": 8, "seed": 1}
    res = sumprod.run_experiment(json.dumps(cfg), str(tmp_path), threads=2)
    assert res["all_pass"]
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["experiment"] == "oracle-suite"
