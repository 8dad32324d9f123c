import json
import os

import pytest

from muondemur.core import MuonDemur
from muondemur.output import read_table


def run(subcommand, config_yaml, out_dir, target="ALL", **kwargs):
    MuonDemur(subcommand, target, config_string=config_yaml, out_dir=str(out_dir), **kwargs).run()


def load_json(path):
    with open(path) as handle:
        return json.load(handle)


def test__levels__writes_table_and_manifest(tmp_path):
    config_yaml = """
    experiments:
      breit_rabi:
        system:
          hyperfine: isotropic
          A_iso_MHz: 4500
        field:
          sweep:
            start_mT: 0
            stop_mT: 100
            step_mT: 50
    """
    run("levels", config_yaml, tmp_path)

    table = read_table(str(tmp_path / "breit_rabi" / "levels.csv"))
    assert list(table["B0_mT"]) == [0.0, 50.0, 100.0]
    assert set(table) == {"B0_mT", "E1_MHz", "E2_MHz", "E3_MHz", "E4_MHz"}

    manifest = load_json(tmp_path / "breit_rabi" / "levels.manifest.json")
    assert manifest["status"] == "ok"
    assert manifest["artifacts"] == ["levels.csv", "levels.json"]


def test__transitions__rabi_frequency_column(tmp_path):
    config_yaml = """
    experiments:
      lines:
        system:
          hyperfine: isotropic
          A_iso_MHz: 4500
        field:
          B0_mT: 82.2
        drive:
          B1_mT: 0.5
    """
    run("transitions", config_yaml, tmp_path, formats=["csv"])

    table = read_table(str(tmp_path / "lines" / "transitions.csv"))
    assert len(table["nu_MHz"]) == 6
    assert "nu_rabi_MHz" in table
    assert not os.path.exists(tmp_path / "lines" / "transitions.json")


def test__simulate__rabi_trace_and_spectrum(tmp_path):
    config_yaml = """
    experiments:
      rabi:
        system:
          hyperfine: isotropic
          A_iso_MHz: 4500
        field:
          B0_mT: 82.525
        drive:
          transition: [3, 4]
          rabi_MHz: 6.95
          t_end_ns: 1000
        analysis:
          band_MHz: [1, 40]
    """
    run("simulate", config_yaml, tmp_path)

    trace = read_table(str(tmp_path / "rabi" / "trace.csv"))
    assert trace["P"][0] == pytest.approx(1.0, abs=1e-9)
    peaks = load_json(tmp_path / "rabi" / "peaks.json")
    assert peaks["peaks"][0]["nu"] == pytest.approx(6.95, rel=0.03)
    drive = load_json(tmp_path / "rabi" / "drive.json")
    assert drive["B0_mT"] == 82.525


def test__synth_then_fit__recovers_the_rabi_frequency(tmp_path):
    synth_yaml = """
    experiments:
      data:
        system:
          hyperfine: isotropic
          A_iso_MHz: 4500
        field:
          B0_mT: 82.525
        drive:
          transition: [3, 4]
          rabi_MHz: 6.95
          t_end_ns: 1000
        analysis:
          n_muons: 1.0e+8
        seed: 7
    """
    run("synth", synth_yaml, tmp_path)
    histograms = tmp_path / "data" / "histograms.csv"
    assert set(read_table(str(histograms))) == {"t_ns", "N_F", "N_B"}
    truth = load_json(tmp_path / "data" / "truth.json")
    assert truth["seed"] == 7
    assert truth["lines"]

    fit_yaml = f"""
    experiments:
      fitted:
        system:
          hyperfine: isotropic
          A_iso_MHz: 4500
        field:
          B0_mT: 82.525
        analysis:
          input_csv: {histograms}
          init:
            damped_cosine.nu: 6.95
          bounds:
            damped_cosine.lam: [0, 100]
    """
    run("fit", fit_yaml, tmp_path)
    fit = load_json(tmp_path / "fitted" / "fit.json")
    assert fit["parameters"]["damped_cosine.nu"]["value"] == pytest.approx(6.95, abs=0.2)
    assert os.path.exists(tmp_path / "fitted" / "fit_residuals.csv")


@pytest.mark.parametrize("seeds, identical", [((7, 7), True), ((7, 8), False)])
def test__synth__fixed_seed_reproduces_the_files_byte_for_byte(tmp_path, seeds, identical):
    contents = []
    for index, seed in enumerate(seeds):
        synth_yaml = f"""
        experiments:
          data:
            system:
              hyperfine: isotropic
              A_iso_MHz: 4500
            field:
              B0_mT: 82.525
            drive:
              transition: [3, 4]
              rabi_MHz: 6.95
              t_end_ns: 500
            analysis:
              n_muons: 1.0e+6
            seed: {seed}
        """
        out_dir = tmp_path / f"run{index}"
        run("synth", synth_yaml, out_dir)
        contents.append(
            {name: (out_dir / "data" / name).read_bytes() for name in ("histograms.csv", "truth.json")}
        )
    assert (contents[0]["histograms.csv"] == contents[1]["histograms.csv"]) is identical
    assert (contents[0]["truth.json"] == contents[1]["truth.json"]) is identical


def test__demur__sweep_table_and_crossings(tmp_path):
    config_yaml = """
    experiments:
      silicon:
        system:
          A_par_MHz: 67.58
          A_perp_MHz: 35.55
          g_e: 1.9999
        field:
          sweep:
            start_mT: 139.0
            stop_mT: 139.2
            step_mT: 0.1
        drive:
          nu_uw_MHz: 3900
          B1_mT: 0.677
          geometry: TF
    """
    run("demur", config_yaml, tmp_path)

    table = read_table(str(tmp_path / "silicon" / "demur.csv"))
    assert len(table["B0_mT"]) == 3
    crossings = load_json(tmp_path / "silicon" / "crossings.json")
    assert crossings["nu_uw_MHz"] == 3900


def test__shift_curve__one_row_per_drive_field(tmp_path):
    config_yaml = """
    experiments:
      shift:
        system:
          A_par_MHz: 67.58
          A_perp_MHz: 35.55
          g_e: 1.9999
        field:
          B0_mT: 140.2
        drive:
          nu_uw_MHz: 3900
        analysis:
          B1_list_mT: [0.5, 1.0]
    """
    run("shift-curve", config_yaml, tmp_path)
    table = read_table(str(tmp_path / "shift" / "shift_curve.csv"))
    assert list(table["B1_mT"]) == [0.5, 1.0]


def test__narrowing__fwhm_map(tmp_path):
    config_yaml = """
    experiments:
      narrow:
        system:
          A_par_MHz: 67.58
          A_perp_MHz: 35.55
        field:
          B0_mT: 140.2
        analysis:
          nu1_means_MHz: [5, 10]
          Omega_means_MHz: [0, 5]
          nu1_fwhm_MHz: 0.4
          Omega_fwhm_MHz: 4.2
    """
    run("narrowing", config_yaml, tmp_path)
    table = read_table(str(tmp_path / "narrow" / "narrowing_map.csv"))
    assert len(table["fwhm_MHz"]) == 4


def test__failing_workflow__keeps_marker_and_exits_with_processing_error(tmp_path):
    config_yaml = """
    experiments:
      nothing_to_fit:
        system:
          hyperfine: isotropic
          A_iso_MHz: 4500
        field:
          B0_mT: 82.2
    """
    with pytest.raises(SystemExit) as e:
        run("fit", config_yaml, tmp_path)
    assert e.value.code == 3
    assert os.path.exists(tmp_path / "nothing_to_fit" / "fit.failed")
    manifest = load_json(tmp_path / "nothing_to_fit" / "fit.manifest.json")
    assert manifest["status"] == "failed"


def test__seed_override__lands_in_the_manifest(tmp_path):
    config_yaml = """
    experiments:
      seeded:
        system:
          hyperfine: isotropic
          A_iso_MHz: 4500
        field:
          B0_mT: 10
        seed: 1
    """
    run("levels", config_yaml, tmp_path, seed=99)
    assert load_json(tmp_path / "seeded" / "levels.manifest.json")["seed"] == 99


def test__unknown_experiment__exits_with_invalid_input(tmp_path):
    config_yaml = """
    experiments:
      known:
        system:
          hyperfine: isotropic
          A_iso_MHz: 4500
        field:
          B0_mT: 10
    """
    with pytest.raises(SystemExit) as e:
        run("levels", config_yaml, tmp_path, target="unknown")
    assert e.value.code == 2


def test__schema_violation__exits_with_invalid_input(tmp_path):
    config_yaml = """
    experiments:
      broken:
        system:
          hyperfine: isotropic
        field:
          B0_mT: 10
    """
    with pytest.raises(SystemExit) as e:
        run("levels", config_yaml, tmp_path)
    assert e.value.code == 2


def test__reproduce__unknown_figure_exits(tmp_path):
    with pytest.raises(SystemExit) as e:
        MuonDemur("reproduce", "fig99", out_dir=str(tmp_path))
    assert e.value.code == 2


def test__coverage__writes_replicates_and_summary(tmp_path):
    config_yaml = """
    experiments:
      calibration:
        workflow: coverage
        seed: 3
        system:
          hyperfine: isotropic
          A_iso_MHz: 4500
        field:
          B0_mT: 82.525
        analysis:
          n_muons: 1.0e+6
          coverage:
            replicates: 3
            t_end_ns: 1000
            bin_ns: 4
            truth:
              damped_cosine.A: 0.1
              damped_cosine.nu: 6.95
              damped_cosine.lam: 1.4
              damped_cosine.phi: 0.3
              constant.A: 0.05
    """
    run("coverage", config_yaml, tmp_path)

    summary = load_json(tmp_path / "calibration" / "coverage.json")
    assert summary["replicates"] == 3
    assert set(summary["coverage"]) == {
        "damped_cosine.A",
        "damped_cosine.nu",
        "damped_cosine.lam",
        "damped_cosine.phi",
        "constant.A",
    }
    table = read_table(str(tmp_path / "calibration" / "replicates.csv"))
    assert list(table["replicate"]) == [0, 1, 2]
