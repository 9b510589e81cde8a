"""Command line runner, log files and interrupt handling."""

import csv
import logging
import os
import signal

import pytest

import logfiles
import version
from delayedints import DelayedKeyboardInterrupt
from simlab import build_parser, main


EXPERIMENT = """
simlab:
  experiment:
    name: 'cli'
    model: 'gaussian'
    truth: [0.0, 1.0]
    sample_size: 30
    runs: 2
    seed: 11
    contamination:
      kind: 'replace_largest'
      k: 3
      value: 10.0
  estimators:
    - estimator:
        id: 'mle'
        method: 'mle'
    - estimator:
        id: 'mpd'
        method: 'mpd'
        a: 0.5
  settings:
    optimizer:
      max_iters: 300
      restarts: 1
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Run in a scratch directory and leave the logger and SIGTERM handler as they were."""
    monkeypatch.chdir(tmp_path)
    saved = signal.getsignal(signal.SIGTERM)
    yield tmp_path
    signal.signal(signal.SIGTERM, saved)
    logger = logging.getLogger('simlab')
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.setLevel(logging.NOTSET)


class TestParser:

    def test_run_defaults(self):
        args = build_parser().parse_args(['run'])
        assert args.config is None
        assert args.out == 'results'
        assert (args.seed, args.runs, args.jobs, args.clean) == (None, None, None, False)

    def test_figure(self):
        args = build_parser().parse_args(['figure', '--kind', 'if_scan', '--out', 'if.csv', '--gamma', '-0.5'])
        assert args.kind == 'if_scan'
        assert args.gamma == '-0.5'

    def test_negative_lists(self):
        args = build_parser().parse_args(['figure', '--kind', 'if_scan', '--out', 'if.csv',
                                          '--grid=-10,10,201', '--gamma=-0.5,0.5'])
        assert args.grid == '-10,10,201'
        assert args.gamma == '-0.5,0.5'

    @pytest.mark.parametrize("argv", [[], ['figure', '--out', 'x.csv'], ['figure', '--kind', 'pie', '--out', 'x']])
    def test_rejects(self, argv):
        with pytest.raises(SystemExit):
            build_parser().parse_args(argv)


class TestMain:

    def test_run(self, workdir):
        config = workdir / 'cli.yaml'
        config.write_text(EXPERIMENT)
        assert main(['run', '--config', str(config), '--out', 'out', '--runs', '1']) == 0
        with open(workdir / 'out' / 'runs.csv', encoding='utf-8') as handle:
            assert 'runs=1' in handle.readline()
            assert [r['estimator_id'] for r in csv.DictReader(handle)] == ['mle', 'mpd']
        assert (workdir / 'out' / 'summary.csv').exists()
        assert list((workdir / 'log').iterdir())

    def test_run_missing_config(self, workdir):
        assert main(['run', '--config', str(workdir / 'missing.yaml')]) == 1
        assert not (workdir / 'results').exists()

    def test_figure(self, workdir):
        out = workdir / 'curves.csv'
        assert main(['figure', '--kind', 'objective_curves', '--out', str(out), '--gamma', '0.5',
                     '--window', '1.0', '--grid=-1,1,5']) == 0
        assert len(out.read_text().splitlines()) == 2 + 5

    def test_figure_bad_grid(self, workdir):
        assert main(['figure', '--kind', 'objective_curves', '--out', str(workdir / 'c.csv'),
                     '--grid', '1,0,5']) == 1


class TestLogfiles:

    def test_start_does_not_stack_handlers(self, workdir):
        first = logfiles.start(str(workdir / 'log' / 'simlab'), console=False)
        second = logfiles.start(str(workdir / 'log' / 'simlab'), console=False)
        assert first == second
        assert os.path.isfile(first)
        assert len(logging.getLogger('simlab').handlers) == 1

    def test_debug_switch(self, monkeypatch):
        monkeypatch.setenv('SIMLAB_DEBUG', 'true')
        assert logfiles.debug_enabled()
        monkeypatch.setenv('SIMLAB_DEBUG', 'no')
        assert not logfiles.debug_enabled()


class TestDelayedKeyboardInterrupt:

    def test_interrupt_waits_for_the_block(self):
        finished = False
        with pytest.raises(KeyboardInterrupt):
            with DelayedKeyboardInterrupt() as guard:
                os.kill(os.getpid(), signal.SIGINT)
                assert guard.pending
                finished = True
        assert finished

    def test_quiet_block(self):
        with DelayedKeyboardInterrupt() as guard:
            pass
        assert not guard.pending


def test_version_string():
    assert isinstance(version.get_version(), str)
    assert version.get_version()
