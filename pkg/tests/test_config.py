"""Tests for campaign configuration files and trace storage."""

import json

import pytest

from config import CampaignConfig, ConfigManager
from errors import ConfigError
from simulator import execute
from storage import StorageManager


def test_defaults_are_valid():
    cfg = CampaignConfig()
    cfg.validate()
    assert cfg.sources_per_task == 10
    assert cfg.fault['kind'] == "None"


@pytest.mark.parametrize("data", [
    {'colour': "blue"},
    {'tasks': ["Juggle"]},
    {'mrs': ["MR9_Teleport"]},
    {'strictness': ["Extreme"]},
    {'sources_per_task': 0},
    {'jobs': 0},
    {'fault': {'magnitude': 0.1}},
    {'brightness_factors': []},
])
def test_invalid_config(data):
    with pytest.raises(ConfigError):
        CampaignConfig.from_dict(data)


def test_config_file_round_trip(tmp_path):
    path = str(tmp_path / "campaign.json")
    manager = ConfigManager()
    manager.apply_overrides({'seed': 12, 'tasks': ["PutIn"]})
    manager.save_config(path)
    loaded = ConfigManager(path).config
    assert loaded.seed == 12
    assert loaded.tasks == ["PutIn"]
    assert loaded == manager.config


def test_overrides_skip_unset_flags(tmp_path):
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps({'seed': 5, 'jobs': 2}), encoding='utf-8')
    cfg = ConfigManager(str(path)).apply_overrides({'seed': None, 'jobs': 4})
    assert (cfg.seed, cfg.jobs) == (5, 4)


@pytest.mark.parametrize("content", ["[1, 2]", "{ broken"])
def test_malformed_config_file(tmp_path, content):
    path = tmp_path / "campaign.json"
    path.write_text(content, encoding='utf-8')
    with pytest.raises(ConfigError):
        ConfigManager(str(path))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        ConfigManager(str(tmp_path / "missing.json"))


def test_trace_storage(tmp_path, pick_case):
    storage = StorageManager(str(tmp_path / "traces"))
    result = execute(pick_case)
    assert storage.save_trace(pick_case.id, result) == "PickUp-000.jsonl"
    with open(storage.get_trace_path(pick_case.id), encoding='utf-8') as f:
        records = [json.loads(line) for line in f]
    assert len(records) == result.steps + 1
    assert records[-1]['events'][0]['kind'] == "grasp"
    assert storage.list_traces() == ["PickUp-000"]
    storage.clear()
    assert storage.list_traces() == []
