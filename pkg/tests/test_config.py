"""Config file loading and POCO_* environment overrides."""

from __future__ import annotations

import json

import pytest

from pocolabel.config import ApiConfig, StoreConfig, load_config


def test_defaults(tmp_path, monkeypatch):
    monkeypatch.delenv("POCO_CONFIG", raising=False)
    monkeypatch.delenv("POCO_ROOT", raising=False)
    config = load_config(None)
    assert config.store.autosave_period == 30.0
    assert config.store.undo_capacity == 64
    assert config.listen == "127.0.0.1:8440"
    assert config.clients.default_padding == 50.0
    assert config.clients.confidence_threshold == 0.5


def test_file_values(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "root": str(tmp_path / "store"),
        "autosave_period": 5,
        "undo_capacity": 8,
        "listen": "0.0.0.0:9000",
        "dextr_url": "http://models:8100",
        "auth": {"mode": "token", "tokens": {"s3cret": 1}},
    }))
    config = load_config(path, env=False)
    assert config.store.root == tmp_path / "store"
    assert config.store.autosave_period == 5.0
    assert config.store.undo_capacity == 8
    assert config.listen == "0.0.0.0:9000"
    assert config.clients.dextr_url == "http://models:8100"
    assert config.auth_mode == "token"
    assert config.tokens == {"s3cret": 1}


def test_env_overrides_file(tmp_path, monkeypatch):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"root": "/from-file", "listen": "127.0.0.1:1111"}))
    monkeypatch.setenv("POCO_ROOT", str(tmp_path / "env-root"))
    monkeypatch.setenv("POCO_LISTEN", "127.0.0.1:2222")
    monkeypatch.setenv("POCO_AUTOSAVE_PERIOD", "12.5")
    monkeypatch.setenv("POCO_UNDO_CAPACITY", "7")
    monkeypatch.setenv("POCO_DEXTR_URL", "http://env-dextr")
    monkeypatch.setenv("POCO_SEGMENTER_URL", "http://env-seg")
    monkeypatch.setenv("POCO_SEARCH_PROVIDER", "stub:/pool")
    config = load_config(path)
    assert config.store.root == tmp_path / "env-root"
    assert config.listen == "127.0.0.1:2222"
    assert config.store.autosave_period == 12.5
    assert config.store.undo_capacity == 7
    assert config.clients.dextr_url == "http://env-dextr"
    assert config.clients.segmenter_url == "http://env-seg"
    assert config.clients.search_provider == "stub:/pool"


def test_config_path_from_env(tmp_path, monkeypatch):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"undo_capacity": 3}))
    monkeypatch.setenv("POCO_CONFIG", str(path))
    monkeypatch.delenv("POCO_UNDO_CAPACITY", raising=False)
    assert load_config(None).store.undo_capacity == 3


def test_bad_listen_rejected(tmp_path):
    with pytest.raises(ValueError):
        ApiConfig(store=StoreConfig(root=tmp_path), listen="no-port")


def test_bad_autosave_rejected(tmp_path):
    with pytest.raises(ValueError):
        StoreConfig(root=tmp_path, autosave_period=0)
