""" `sim` command group: gen, run, compare and storage

Registered on the Flask app (`flask sim ...`) by main.py and runnable
without the server through scripts/sim.py.

Exit codes: 0 ok, 2 configuration or pattern error, 3 trace error.
"""
import json
import logging
import os
from dataclasses import replace
from functools import wraps

import click
from flask.cli import AppGroup

from model.alecto import storage_report
from model.errors import ConfigError
from model.experiment import compare_experiments, load_config, load_records, run_experiment
from model.metrics import emit_csv
from model.trace import PatternError, TraceError, gen_interleave, trace_digest, write_trace

EXIT_CONFIG = 2
EXIT_TRACE = 3


def _fail(message, code):
    click.echo(f"error: {message}", err=True)
    raise click.exceptions.Exit(code)


def _guarded(func):
    """Map domain errors onto the documented exit codes."""
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except TraceError as e:
            _fail(e, EXIT_TRACE)
        except (ConfigError, PatternError) as e:
            _fail(e, EXIT_CONFIG)
    return wrapper


def _override(config, trace, seed):
    if trace is not None:
        if not os.path.isfile(trace):
            raise TraceError(f"trace file not found: {trace}")
        config = replace(config, trace_path=trace)
    if seed is not None:
        config = replace(config, seed=seed).validate()
    return config


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


@click.group(cls=AppGroup, name='sim', help='Prefetcher selection simulator')
@click.option('-v', '--verbose', count=True, help='INFO with -v, DEBUG with -vv')
def sim_cli(verbose):
    if verbose:
        logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
        level = logging.DEBUG if verbose > 1 else logging.INFO
        logging.getLogger().setLevel(level)
        logging.getLogger('model').setLevel(level)


@sim_cli.command('gen', with_appcontext=False)
@click.option('--config', 'config_path', required=True, help='INI file with [pattern.*] sections')
@click.option('--seed', type=int, default=None, help='64-bit seed (default: [experiment] seed or 0)')
@click.option('--out', required=True, help='trace file to write')
@_guarded
def gen(config_path, seed, out):
    """Generate a synthetic trace from pattern sections."""
    config = _override(load_config(config_path), None, seed)
    if not config.patterns:
        raise ConfigError(f"{config_path} has no [pattern.*] sections")
    records = gen_interleave(list(config.patterns), config.seed)
    write_trace(out, records, header=f"seed={config.seed} digest={trace_digest(records)}")
    click.echo(f"wrote {len(records)} records to {out}")


@sim_cli.command('run')
@click.option('--config', 'config_path', required=True, help='experiment INI file')
@click.option('--trace', default=None, help='trace file, replacing the configured trace')
@click.option('--seed', type=int, default=None, help='64-bit seed override')
@click.option('--out', default=None, help='JSON report path; the CSV row goes next to it')
@click.option('--record', is_flag=True, help='store the report in the run database')
@_guarded
def run(config_path, trace, seed, out, record):
    """Run one experiment and report it."""
    config = _override(load_config(config_path), trace, seed)
    records = load_records(config)
    report = run_experiment(config, records)
    text = json.dumps(report.read(), indent=2, sort_keys=True) + "\n"
    out = out or config.out
    if out:
        _write(out, text)
        _write(os.path.splitext(out)[0] + ".csv", emit_csv([report]))
        click.echo(f"{report.selector}: coverage={report.coverage:.4f} accuracy={report.accuracy:.4f} -> {out}")
    else:
        click.echo(text, nl=False)
    if record:
        from __init__ import db
        from model.run_record import RunRecord
        db.create_all()
        stored = RunRecord(report).create()
        if stored is not None:
            click.echo(f"stored run {stored.id}")


@sim_cli.command('compare', with_appcontext=False)
@click.option('--config', 'config_paths', multiple=True, required=True, help='experiment INI file (repeatable)')
@click.option('--trace', default=None, help='trace file shared by every experiment')
@click.option('--seed', type=int, default=None, help='64-bit seed override for every experiment')
@click.option('--out', default=None, help='combined CSV path (default: stdout)')
@click.option('--jobs', type=int, default=1, help='experiments simulated concurrently')
@_guarded
def compare(config_paths, trace, seed, out, jobs):
    """Run several experiments on one trace and emit one CSV row each."""
    configs = [_override(load_config(p), trace, seed) for p in config_paths]
    text = emit_csv(compare_experiments(configs, jobs=jobs))
    if out:
        _write(out, text)
        click.echo(f"wrote {len(configs)} rows to {out}")
    else:
        click.echo(text, nl=False)


@sim_cli.command('storage', with_appcontext=False)
@click.option('-P', '--prefetchers', type=int, default=3, help='number of prefetchers under selection')
@_guarded
def storage(prefetchers):
    """Print the table storage budget as JSON."""
    click.echo(json.dumps(storage_report(prefetchers), indent=2))
