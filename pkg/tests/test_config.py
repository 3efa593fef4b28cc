import os

import pytest

from stableforms import config
from stableforms.errors import ConfigError


def test_integrator_defaults():
    # adaptive stepping unless --method says otherwise
    assert config.DEFAULT_METHOD == "rkf45"
    assert config.DEFAULT_ATOL == pytest.approx(1e-10)
    assert config.DEFAULT_RTOL == pytest.approx(1e-10)
    assert config.MAX_STEP == pytest.approx(1e-2)


def test_output_settings():
    # Trajectories are written with 17 significant digits
    assert config.CSV_DIGITS == 17
    assert config.SCHEMA_VERSION == "1"


def test_forms_dir_contains_normal_forms():
    # normal forms ship inside the package
    assert os.path.isdir(config.FORMS_DIR)
    assert os.path.exists(os.path.join(config.FORMS_DIR, "normal-g2.json"))


def test_seed_defaults_when_unset(monkeypatch):
    monkeypatch.delenv(config.SEED_ENV_VAR, raising=False)
    assert config.seed_from_env() == config.DEFAULT_SEED


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv(config.SEED_ENV_VAR, "1234")
    assert config.seed_from_env() == 1234


def test_malformed_seed_raises(monkeypatch):
    # only integers are accepted
    monkeypatch.setenv(config.SEED_ENV_VAR, "not-a-number")
    with pytest.raises(ConfigError):
        config.seed_from_env()
