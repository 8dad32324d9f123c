import logging

import pytest

from muondemur.configuration import Configuration
from muondemur.configuration.core import (
    ConfigFileNotFoundException,
    ConfigInvalidException,
    KeyNotFoundException,
)

logger = logging.getLogger(__name__)


@pytest.fixture
def configuration_with_common_and_extends():
    config_yaml = """
    ---
    config_version: 1
    experiments:
      "*":
        system:
          A_par_MHz: 67.58
          A_perp_MHz: 35.55
          g_e: 1.9999
        drive:
          nu_uw_MHz: 3900
          geometry: TF
      sweep_base:
        workflow: demur
        field:
          sweep:
            start_mT: 138.0
            stop_mT: 141.0
            step_mT: 0.05
        drive:
          B1_mT: 0.677
      finer:
        extends: sweep_base
        field:
          sweep:
            step_mT: 0.01
        analysis:
          band_MHz: [1, 120]
    """
    return Configuration(config_string=config_yaml)


def test__get_experiments__skips_common_block(configuration_with_common_and_extends):
    assert configuration_with_common_and_extends.get_experiments() == ["finer", "sweep_base"]


def test__effective_config__common_values_are_inherited(configuration_with_common_and_extends):
    effective = configuration_with_common_and_extends.get_effective_config_for_experiment("sweep_base")
    assert effective["system"]["A_par_MHz"] == 67.58
    assert effective["drive"] == {"nu_uw_MHz": 3900, "geometry": "TF", "B1_mT": 0.677}


def test__effective_config__extends_merges_additively(configuration_with_common_and_extends):
    effective = configuration_with_common_and_extends.get_effective_config_for_experiment("finer")
    assert "extends" not in effective
    assert effective["workflow"] == "demur"
    assert effective["field"]["sweep"] == {"start_mT": 138.0, "stop_mT": 141.0, "step_mT": 0.01}
    assert effective["drive"]["B1_mT"] == 0.677


def test__validated_config__builds_the_system(configuration_with_common_and_extends):
    config = configuration_with_common_and_extends.get_validated_config("sweep_base")
    assert config.system.build().g_e == pytest.approx(1.9999)
    assert len(config.field.values()) == 61
    assert config.field.values()[-1] == pytest.approx(141.0)
    assert config.relaxation.build() is None


def test__get__missing_key_raises(configuration_with_common_and_extends):
    with pytest.raises(KeyNotFoundException):
        configuration_with_common_and_extends.get("experiments|nope|field")
    assert configuration_with_common_and_extends.get("experiments|nope", default=5) == 5
    with pytest.raises(KeyNotFoundException):
        configuration_with_common_and_extends.get_effective_config_for_experiment("nope")


def test__validated_config__unknown_key_reports_path_and_line():
    config_yaml = """
    ---
    config_version: 1
    experiments:
      "*":
        system:
          A_par_MHz: 67.58
          A_perp_MHz: 35.55
      bad:
        field:
          B0_mT: 140.2
        drive:
          nu_uw_MHZ: 3900
    """
    configuration = Configuration(config_string=config_yaml)
    with pytest.raises(ConfigInvalidException) as e:
        configuration.get_validated_config("bad")
    assert "experiments|bad|drive|nu_uw_MHZ (line 13)" in str(e.value)


def test__validated_config__errors_in_common_block_point_at_it():
    config_yaml = """
    ---
    config_version: 1
    experiments:
      "*":
        system:
          hyperfine: axial
          A_iso_MHz: 4500
      bad:
        field:
          B0_mT: 82.2
    """
    configuration = Configuration(config_string=config_yaml)
    with pytest.raises(ConfigInvalidException) as e:
        configuration.get_validated_config("bad")
    assert "experiments|bad|system (line 6)" in str(e.value)


def test__extends__chains_are_rejected():
    config_yaml = """
    experiments:
      a:
        extends: b
      b:
        extends: c
      c:
        workflow: levels
    """
    with pytest.raises(ConfigInvalidException):
        Configuration(config_string=config_yaml).get_effective_config_for_experiment("a")


def test__config_version__mismatch_is_rejected():
    with pytest.raises(ConfigInvalidException):
        Configuration(config_string="config_version: 2\nexperiments: {}\n")


def test__config__must_be_a_mapping():
    with pytest.raises(ConfigInvalidException):
        Configuration(config_string="- just\n- a list\n")


def test__config__json_is_accepted():
    configuration = Configuration(config_string='{"experiments": {"x": {"workflow": "levels"}}}')
    assert configuration.get_experiments() == ["x"]


def test__config_file__missing(tmp_path):
    with pytest.raises(ConfigFileNotFoundException):
        Configuration(config_path=str(tmp_path / "missing.yml"))


def test__config__path_and_string_together_exit():
    with pytest.raises(SystemExit):
        Configuration(config_path="experiments.yml", config_string="experiments: {}")
