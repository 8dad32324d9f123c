import csv
import json
import os
import textwrap

from muondemur.core import MuonDemur
from muondemur.output import read_table


def run_muondemur(subcommand, target="ALL", out_dir=".", config=None, **kwargs):
    config_string = textwrap.dedent(config) if config else None
    md = MuonDemur(
        subcommand=subcommand,
        target=target,
        config_string=config_string,
        out_dir=str(out_dir),
        **kwargs,
    )
    md.run()
    return md


def reproduce(figure_id, out_dir):
    return run_muondemur("reproduce", figure_id, out_dir)


def table(out_dir, experiment, name):
    return read_table(os.path.join(str(out_dir), experiment, f"{name}.csv"))


def document(out_dir, experiment, name):
    with open(os.path.join(str(out_dir), experiment, f"{name}.json")) as handle:
        return json.load(handle)


def records(out_dir, experiment, name):
    """:return: the rows of a result table as dicts of strings, flags and booleans included"""
    with open(os.path.join(str(out_dir), experiment, f"{name}.csv"), newline="") as handle:
        return list(csv.DictReader(handle))
