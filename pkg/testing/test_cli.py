import json
import os

from model.trace import read_trace

CONFIGS = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'configs'))

EXPERIMENT = """
[experiment]
selector = {selector}
seed = {seed}

[pattern.stride]
kind = stride
pc = 0x400100
count = 3000
base = 0x10000000

[pattern.spatial]
kind = spatial
pc = 0x400200
count = 1600
base = 0x20000000
footprint = 0x2008040408211
"""


def experiment(tmp_path, selector="alecto", seed=5, name=None):
    path = tmp_path / (name or f"{selector}-{seed}.ini")
    path.write_text(EXPERIMENT.format(selector=selector, seed=seed))
    return str(path)


def sim(cli_runner, *args):
    return cli_runner.invoke(args=['sim', *args])


def test_storage_report(cli_runner):
    result = sim(cli_runner, 'storage', '-P', '3')
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert (report['total_bits'], report['total_bytes'], report['total_kib']) == (10688, 1336, 1.3)
    assert report['total_excluding_sandbox_bytes'] == 760
    assert report['sandbox_bits'] == 4608
    assert json.loads(sim(cli_runner, 'storage', '--prefetchers', '1').stdout)['total_bits'] == 7104


def test_storage_rejects_zero_prefetchers(cli_runner):
    assert sim(cli_runner, 'storage', '-P', '0').exit_code == 2


def test_gen_writes_parseable_deterministic_trace(cli_runner, tmp_path):
    config = os.path.join(CONFIGS, 'patterns.ini')
    first, second = tmp_path / 'a.trace', tmp_path / 'b.trace'
    assert sim(cli_runner, 'gen', '--config', config, '--seed', '5', '--out', str(first)).exit_code == 0
    assert sim(cli_runner, 'gen', '--config', config, '--seed', '5', '--out', str(second)).exit_code == 0
    assert first.read_bytes() == second.read_bytes()
    assert first.read_text().startswith('# seed=5 digest=')
    assert len(read_trace(str(first))) == 18000


def test_gen_rejects_bad_patterns(cli_runner, tmp_path):
    bad = tmp_path / 'bad.ini'
    bad.write_text("[pattern.x]\nkind = spiral\npc = 1\ncount = 4\n")
    result = sim(cli_runner, 'gen', '--config', str(bad), '--out', str(tmp_path / 'x.trace'))
    assert result.exit_code == 2
    assert 'error' in result.output
    empty = tmp_path / 'empty.ini'
    empty.write_text("[experiment]\nseed = 1\n")
    assert sim(cli_runner, 'gen', '--config', str(empty), '--out', str(tmp_path / 'y.trace')).exit_code == 2


def test_run_writes_json_and_csv(cli_runner, tmp_path):
    out = tmp_path / 'report.json'
    result = sim(cli_runner, 'run', '--config', experiment(tmp_path), '--out', str(out))
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report['selector'] == 'alecto'
    assert report['demands'] == 4600
    assert report['covered_timely'] + report['covered_untimely'] + report['uncovered'] == report['shadow_misses']
    lines = (tmp_path / 'report.csv').read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith('alecto,')


def test_run_on_sequential_stride_covers_misses(cli_runner, tmp_path):
    config = tmp_path / 'seq.ini'
    config.write_text("[pattern.s]\nkind = stride\npc = 0x400100\ncount = 3000\n")
    result = sim(cli_runner, 'run', '--config', str(config))
    assert result.exit_code == 0
    assert json.loads(result.stdout)['coverage'] >= 0.9


def test_run_dol_trains_once_per_demand(cli_runner, tmp_path):
    result = sim(cli_runner, 'run', '--config', experiment(tmp_path, selector='dol'))
    report = json.loads(result.stdout)
    assert sum(report['train_count'].values()) == report['demands']


def test_run_records_to_database(cli_runner, tmp_path):
    result = sim(cli_runner, 'run', '--config', experiment(tmp_path, selector='ipcp'),
                 '--out', str(tmp_path / 'r.json'), '--record')
    assert result.exit_code == 0
    assert 'stored run' in result.output


def test_run_exit_codes(cli_runner, tmp_path):
    assert sim(cli_runner, 'run', '--config', experiment(tmp_path, selector='oracle')).exit_code == 2
    assert sim(cli_runner, 'run', '--config', str(tmp_path / 'absent.ini')).exit_code == 2
    config = experiment(tmp_path)
    assert sim(cli_runner, 'run', '--config', config, '--trace', str(tmp_path / 'absent.trace')).exit_code == 3
    broken = tmp_path / 'broken.trace'
    broken.write_text("0,0x1,0x40\n1,0x1\n")
    assert sim(cli_runner, 'run', '--config', config, '--trace', str(broken)).exit_code == 3
    binary = tmp_path / 'binary.trace'
    binary.write_bytes(b"0,0x1,0x40\n1,0x1,\xff\xfe\n")
    result = sim(cli_runner, 'run', '--config', config, '--trace', str(binary))
    assert result.exit_code == 3
    assert 'not UTF-8' in result.output


def test_compare_emits_one_row_per_selector(cli_runner, tmp_path):
    configs = [experiment(tmp_path, selector=s) for s in ('alecto', 'ipcp')]
    out = tmp_path / 'cmp.csv'
    args = ['compare', '--config', configs[0], '--config', configs[1], '--jobs', '2']
    assert sim(cli_runner, *args, '--out', str(out)).exit_code == 0
    header, *rows = out.read_text().splitlines()
    assert header.startswith('selector,trace,demands')
    assert [r.split(',')[0] for r in rows] == ['alecto', 'ipcp']
    assert len({r.split(',')[1] for r in rows}) == 1


def test_compare_is_byte_identical_across_invocations(cli_runner, tmp_path):
    configs = [experiment(tmp_path, selector=s) for s in ('alecto', 'dol', 'bandit3')]
    args = ['compare']
    for path in configs:
        args += ['--config', path]
    first = sim(cli_runner, *args)
    second = sim(cli_runner, *args, '--jobs', '3')
    assert first.exit_code == second.exit_code == 0
    assert first.stdout == second.stdout


def test_compare_shared_trace_file(cli_runner, tmp_path):
    trace = tmp_path / 'shared.trace'
    sim(cli_runner, 'gen', '--config', experiment(tmp_path), '--out', str(trace))
    configs = [experiment(tmp_path, selector='alecto', seed=1), experiment(tmp_path, selector='ipcp', seed=2)]
    result = sim(cli_runner, 'compare', '--config', configs[0], '--config', configs[1], '--trace', str(trace))
    assert result.exit_code == 0
    assert len(result.stdout.splitlines()) == 3


def test_compare_rejects_mismatched_traces(cli_runner, tmp_path):
    configs = [experiment(tmp_path, selector='alecto', seed=1), experiment(tmp_path, selector='ipcp', seed=2)]
    result = sim(cli_runner, 'compare', '--config', configs[0], '--config', configs[1])
    assert result.exit_code == 2
