import json

import pytest

from bagdet.config import Config, load_config


def test_defaults():
    cfg = load_config(environ={})
    assert cfg.max_search_nodes == 10**6 and cfg.max_domain_size == 10**5
    assert cfg.limits.max_search_nodes == 10**6


def test_file_then_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"max_domain_size": 500, "seed": 3}))
    cfg = load_config({"seed": 9, "output_format": None}, environ={"BAGDET_CONFIG": str(path)})
    assert cfg.max_domain_size == 500 and cfg.seed == 9 and cfg.output_format == "json"


@pytest.mark.parametrize("field,value", [("max_search_nodes", -1), ("max_materialized_size", 0), ("output_format", "xml")])
def test_validation(field, value):
    with pytest.raises(ValueError):
        Config(**{field: value})
