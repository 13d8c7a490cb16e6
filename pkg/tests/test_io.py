import json
import math

import numpy as np
import pytest

from conftest import DATA
from reflexia import fixtures
from reflexia.exceptions import InputError
from reflexia.io import (RunConfig, algebra_from_dict, algebra_to_dict, dumps_report,
                         involution_from_dict, load_algebra, load_involution, load_subalgebra,
                         read_json, subalgebra_from_obj, to_jsonable)


def test_algebra_round_trip():
    spec = fixtures.sl2()
    back = algebra_from_dict(json.loads(json.dumps(algebra_to_dict(spec))))
    np.testing.assert_array_equal(back.structure_constants, spec.structure_constants)
    np.testing.assert_array_equal(back.matrix_basis, spec.matrix_basis)
    assert back.labels == ("E", "F", "H")


def test_algebra_without_matrices():
    spec = algebra_from_dict({"dim": 3, "structure_constants": fixtures.so3().structure_constants.tolist()})
    assert spec.matrix_basis is None


@pytest.mark.parametrize("bad", [
    {"structure_constants": []},
    {"dim": 0, "structure_constants": []},
    {"dim": 2, "structure_constants": [[[0, 0], [0, 0]]]},
    {"dim": 1, "structure_constants": [[["x"]]]},
    {"dim": 1, "structure_constants": [[[float("nan")]]]},
    {"dim": 2, "structure_constants": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]},  # not antisymmetric
])
def test_bad_algebras(bad):
    with pytest.raises(InputError):
        algebra_from_dict(bad)


def test_read_json_errors(tmp_path):
    with pytest.raises(InputError):
        read_json(tmp_path / "missing.json")
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(InputError):
        read_json(p)


def test_involution_forms():
    spec = fixtures.so3()
    inv = involution_from_dict({"sigma": np.diag([1.0, -1, -1]).tolist()}, spec)
    assert inv.source == "abstract"
    inv = involution_from_dict({"h_matrix": np.diag([1.0, -1, -1]).tolist()}, spec)
    assert inv.source == "group_element"
    np.testing.assert_allclose(inv.sigma, np.diag([1.0, -1, -1]))
    for bad in ({}, {"sigma": [[1.0]]}, {"sigma": np.eye(3).tolist(), "h_matrix": np.eye(3).tolist()},
                {"h_matrix": np.eye(2).tolist()}):
        with pytest.raises(InputError):
            involution_from_dict(bad, spec)


def test_subalgebra_forms():
    assert subalgebra_from_obj([], 3).shape == (0, 3)
    assert subalgebra_from_obj({"k_basis": [[1, 0, 0]]}, 3).shape == (1, 3)
    with pytest.raises(InputError):
        subalgebra_from_obj([[1, 0]], 3)
    with pytest.raises(InputError):
        subalgebra_from_obj("L1", 3)


def test_report_serialisation():
    text = dumps_report({"b": np.float64("nan"), "a": np.arange(3), "c": (np.bool_(True), math.inf)})
    assert json.loads(text) == {"a": [0, 1, 2], "b": None, "c": [True, None]}
    assert text.index('"a"') < text.index('"b"') and text.endswith("\n")
    assert to_jsonable({1: np.int64(2)}) == {"1": 2}


def test_run_config_validation(tmp_path):
    base = {"algebra": "a.json", "involution": "i.json", "k_basis": "k.json"}
    cfg = RunConfig.from_dict(base, tmp_path)
    assert cfg.resolve("a.json") == tmp_path / "a.json"
    assert cfg.as_dict()["seed"] == 42 and "base_dir" not in cfg.as_dict()
    for extra in ({"bogus": 1}, {"tolerance": -1}, {"seed": 1.5}, {"flow_times": []},
                  {"n_samples": 0}, {"trust_radius": True}):
        with pytest.raises(InputError):
            RunConfig.from_dict({**base, **extra}, tmp_path)
    with pytest.raises(InputError):
        RunConfig.from_dict({"algebra": "a.json"}, tmp_path)


@pytest.mark.parametrize("name,pair", [("so3", fixtures.so3_pair), ("sl2", fixtures.sl2_pair),
                                       ("heisenberg_central", fixtures.heisenberg_central_pair),
                                       ("so3_plus_r", fixtures.so3_plus_r_pair)])
def test_shipped_files_match_fixtures(name, pair):
    spec, h, k = pair()
    alg = name.split("_central")[0]
    loaded = load_algebra(DATA / "algebras" / f"{alg}.json")
    np.testing.assert_array_equal(loaded.structure_constants, spec.structure_constants)
    inv = load_involution(DATA / "involutions" / f"{name}.json", loaded)
    np.testing.assert_array_equal(inv.h_matrix, h)
    np.testing.assert_array_equal(load_subalgebra(DATA / "subalgebras" / f"{name}.json", spec.dim), k)


def test_shipped_configs_parse():
    for path in sorted((DATA / "configs").glob("*.json")):
        cfg = RunConfig.load(path)
        for rel in (cfg.algebra, cfg.involution, cfg.k_basis):
            assert cfg.resolve(rel).exists(), (path, rel)
