"""Configuration: dataclasses, JSON config file, POCO_* env overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class StoreConfig:
    root: Path
    autosave_period: float = 30.0
    undo_capacity: int = 64

    def __post_init__(self):
        self.root = Path(self.root)
        if self.autosave_period <= 0:
            raise ValueError("autosave_period must be positive")
        if self.undo_capacity < 1:
            raise ValueError("undo_capacity must be >= 1")


@dataclass
class ClientConfig:
    dextr_url: str | None = None
    segmenter_url: str | None = None
    search_provider: str | None = None
    timeout: float = 30.0
    default_padding: float = 50.0
    confidence_threshold: float = 0.5


@dataclass
class ApiConfig:
    store: StoreConfig
    clients: ClientConfig = field(default_factory=ClientConfig)
    listen: str = "127.0.0.1:8440"
    auth_mode: str = "none"  # none | token
    tokens: dict[str, int] = field(default_factory=dict)  # bearer token -> user id

    def __post_init__(self):
        host, _, port = self.listen.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"listen address must be host:port, got {self.listen!r}")
        if self.auth_mode not in ("none", "token"):
            raise ValueError(f"auth_mode must be 'none' or 'token', got {self.auth_mode!r}")

    @property
    def host(self) -> str:
        return self.listen.rpartition(":")[0]

    @property
    def port(self) -> int:
        return int(self.listen.rpartition(":")[2])


def _env(name: str, cast=str):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    return cast(raw)


def load_config(path: str | Path | None = None, env: bool = True) -> ApiConfig:
    """Assemble configuration from an optional JSON file plus environment.

    Environment variables (POCO_ROOT, POCO_AUTOSAVE_PERIOD, POCO_UNDO_CAPACITY,
    POCO_LISTEN, POCO_DEXTR_URL, POCO_SEGMENTER_URL, POCO_SEARCH_PROVIDER)
    override file values.  The config path itself may come from POCO_CONFIG.
    """
    if path is None and env:
        path = _env("POCO_CONFIG")
    raw: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))

    def pick(key: str, env_name: str, default, cast=str):
        value = raw.get(key, default)
        if env:
            override = _env(env_name, cast)
            if override is not None:
                return override
        return value

    store = StoreConfig(
        root=Path(pick("root", "POCO_ROOT", ".")),
        autosave_period=float(pick("autosave_period", "POCO_AUTOSAVE_PERIOD", 30.0, float)),
        undo_capacity=int(pick("undo_capacity", "POCO_UNDO_CAPACITY", 64, int)),
    )
    clients = ClientConfig(
        dextr_url=pick("dextr_url", "POCO_DEXTR_URL", None),
        segmenter_url=pick("segmenter_url", "POCO_SEGMENTER_URL", None),
        search_provider=pick("search_provider", "POCO_SEARCH_PROVIDER", None),
        timeout=float(raw.get("timeout", 30.0)),
        default_padding=float(raw.get("default_padding", 50.0)),
        confidence_threshold=float(raw.get("confidence_threshold", 0.5)),
    )
    auth = raw.get("auth", {})
    return ApiConfig(
        store=store,
        clients=clients,
        listen=str(pick("listen", "POCO_LISTEN", "127.0.0.1:8440")),
        auth_mode=auth.get("mode", "none"),
        tokens={str(k): int(v) for k, v in auth.get("tokens", {}).items()},
    )
