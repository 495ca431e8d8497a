import json

import pytest
from numpy.testing import assert_allclose

from aklt_hqmm.core.linalg import matrix_to_json
from aklt_hqmm.models.aklt import ObservableSpec
from aklt_hqmm.models.hqmm import Ordering
from aklt_hqmm.utils.config_loader import ConfigLoader, ConfigParseError, ConfigValidationError


@pytest.fixture
def loader():
    return ConfigLoader()


def write_json(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_load_observable_json(loader, tmp_path, spins):
    data = {"n_sites": 2, "factors": [matrix_to_json(spins.sz), matrix_to_json(spins.sx)]}
    spec = loader.load_observable(write_json(tmp_path / "y.json", data))
    assert spec.n_sites == 2
    assert_allclose(spec.factors[1], spins.sx)


def test_load_observable_yaml(loader, tmp_path, spins):
    data = {"n_sites": 1, "factors": [matrix_to_json(spins.sz)]}
    path = tmp_path / "y.yaml"
    loader.save_document(data, path)
    assert "n_sites: 1" in path.read_text(encoding="utf-8")
    assert_allclose(loader.load_observable(path).factors[0], spins.sz)


def test_malformed_json_reports_line(loader, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "n_sites": 2,\n  "factors": [\n', encoding="utf-8")
    with pytest.raises(ConfigParseError, match="Malformed JSON") as info:
        loader.load_observable(path)
    assert info.value.line is not None


def test_malformed_yaml_reports_line(loader, tmp_path):
    path = tmp_path / "bad.yml"
    path.write_text("n_sites: [1, 2\nfactors: x\n", encoding="utf-8")
    with pytest.raises(ConfigParseError, match="Malformed YAML") as info:
        loader.load_observable(path)
    assert info.value.line is not None


def test_unknown_suffix(loader, tmp_path):
    with pytest.raises(ConfigParseError, match="Cannot detect format"):
        loader.load_file(tmp_path / "observable.txt")


def test_missing_file(loader, tmp_path):
    with pytest.raises(ConfigParseError, match="Cannot read"):
        loader.load_file(tmp_path / "missing.json")


def test_schema_violation_names_field(loader):
    data = {"n_sites": 1, "factors": [[[1.0, 0.0, 5.0]]]}
    with pytest.raises(ConfigParseError) as info:
        loader.parse_observable(data)
    assert info.value.field is not None


def test_schema_requires_one_representation(loader):
    with pytest.raises(ConfigParseError, match="Invalid observable"):
        loader.parse_observable({"n_sites": 1})


def test_factor_count_is_validation_error(loader, spins):
    data = {"n_sites": 3, "factors": [matrix_to_json(spins.sz)]}
    with pytest.raises(ConfigValidationError, match="declares 3 sites"):
        loader.parse_observable(data)


def test_ragged_matrix_is_validation_error(loader):
    data = {"n_sites": 1, "factors": [[[[1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]]]}
    with pytest.raises(ConfigValidationError):
        loader.parse_observable(data)


def test_load_sample_model(loader, model):
    from pathlib import Path

    sample = Path(__file__).resolve().parent.parent / "aklt_causal_model.json"
    loaded = loader.load_model(sample)
    assert loaded.ordering is Ordering.CAUSAL
    assert_allclose(loaded.emission.left, model.emission.left, atol=1e-15)


def test_model_round_trip(loader, model, tmp_path):
    path = tmp_path / "model.json"
    loader.save_document(model.to_dict(), path)
    loaded = loader.load_model(path)
    assert loaded.hidden.to_dict() == model.hidden.to_dict()


def test_model_dimension_mismatch(loader, model):
    data = model.to_dict()
    data["hidden"] = {"rank_one_trace": 0.5, "dim": 3}
    with pytest.raises(ConfigValidationError, match="Inconsistent model"):
        loader.parse_model(data)


def test_model_schema_rejects_unknown_ordering(loader, model):
    data = model.to_dict()
    data["ordering"] = "sideways"
    with pytest.raises(ConfigParseError, match="Invalid model"):
        loader.parse_model(data)
