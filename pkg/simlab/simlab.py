"""Command line runner for the simulation studies and the figure data."""
# Robust initialization and shutdown code courtesy of
# https://github.com/wbenny/python-graceful-shutdown.git

import argparse
import logging
import sys
import os
import signal

import asyncio

from delayedints import DelayedKeyboardInterrupt
from experiment import Experiment, ExperimentConfig, summarize, write_results
from figures import FIGURE_KINDS, emit_figure_data
from optimize import OptimOptions
from quadrature import QuadratureConfig
from readconfig import read_config
import version
import logfiles
from exceptions import TerminateSignal, NormalCompletion, AbnormalCompletion, FailedInitialization, SimlabError


_LOGGER = logging.getLogger('simlab')

_DEFAULT_OUT = 'results'


class Simlab():

    def __init__(self, config: ExperimentConfig, out_dir: str):
        """Initialize the runner for one experiment."""
        self._config = config
        self._out_dir = out_dir
        self._loop = asyncio.new_event_loop()
        self._experiment = None
        self._summary = None
        signal.signal(signal.SIGTERM, self.catch)
        signal.siginterrupt(signal.SIGTERM, False)

    @property
    def summary(self):
        return self._summary

    def catch(self, signum, frame):
        """Handler for SIGTERM signals."""
        _LOGGER.critical("Received SIGTERM signal, forcing shutdown")
        raise TerminateSignal

    def run(self) -> int:
        """Code to handle the start(), run(), and stop() interfaces, returns the exit code."""
        exit_code = 0
        try:
            try:
                with DelayedKeyboardInterrupt():
                    self._start()
            except KeyboardInterrupt:
                _LOGGER.critical("Received KeyboardInterrupt during startup")
                raise

            self._run()
            raise NormalCompletion

        except NormalCompletion:
            pass
        except (KeyboardInterrupt, TerminateSignal):
            _LOGGER.warning("Experiment interrupted, no results written")
            exit_code = 130
        except AbnormalCompletion:
            _LOGGER.critical("Received AbnormalCompletion exception")
            exit_code = 1
        except FailedInitialization as e:
            _LOGGER.error(f"{e}")
            exit_code = 2
        except Exception as e:
            _LOGGER.error(f"Unexpected exception caught: {e}")
            exit_code = 1
        finally:
            try:
                with DelayedKeyboardInterrupt():
                    self._stop()
            except KeyboardInterrupt:
                _LOGGER.critical("Received KeyboardInterrupt during shutdown")
        return exit_code

    async def _astart(self):
        """Asynchronous initialization code."""
        self._experiment = Experiment(self._config)
        result = await self._experiment.start()
        if not result:
            raise FailedInitialization(f"experiment '{self._config.name}' could not be started")

    async def _arun(self):
        """Asynchronous run code."""
        rows = await self._experiment.run()
        self._summary = summarize(self._config, rows)
        write_results(self._config, rows, self._summary, self._out_dir)
        if self._summary.failures:
            _LOGGER.warning(f"{self._summary.failures} estimator runs failed, see the status column")

    async def _astop(self):
        """Asynchronous closing code."""
        _LOGGER.info(f"Closing experiment '{self._config.name}'")
        if self._experiment:
            await self._experiment.stop()

    def _start(self):
        """Initialize everything prior to running."""
        self._loop.run_until_complete(self._astart())

    def _run(self):
        """Run the study."""
        self._loop.run_until_complete(self._arun())

    def _stop(self):
        """Cleanup after running."""
        self._loop.run_until_complete(self._astop())
        self._loop.close()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='simlab', description="Robust divergence estimation simulation studies.")
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help="run a Monte Carlo study described by an experiment file")
    run.add_argument('--config', default=None, help="experiment file (YAML or JSON), defaults to simlab.yaml")
    run.add_argument('--out', default=_DEFAULT_OUT, help="directory for runs.csv and summary.csv")
    run.add_argument('--seed', type=int, default=None, help="master seed, overrides the file")
    run.add_argument('--runs', type=int, default=None, help="number of runs, overrides the file")
    run.add_argument('--jobs', type=int, default=None, help="worker processes, 1 runs in-process")
    run.add_argument('--clean', action='store_true', help="ignore the contamination section")

    figure = commands.add_parser('figure', help="write the data behind a diagnostic figure")
    figure.add_argument('--kind', required=True, choices=FIGURE_KINDS)
    figure.add_argument('--out', required=True, help="CSV file to write")
    figure.add_argument('--gamma', default=None, help="Cressie-Read gamma, comma separated for objective_curves")
    figure.add_argument('--window', default=None, help="Gaussian window, comma separated for objective_curves")
    figure.add_argument('--grid', default=None,
                        help="'lo,hi,points' parameter or contamination grid; "
                             "written --grid=-10,10,201 when lo is negative")
    figure.add_argument('--sample-size', type=int, default=None,
                        help="dual_gap only: empirical objectives on a sample of this size")
    figure.add_argument('--seed', type=int, default=1, help="dual_gap only: seed of the empirical sample")
    return parser


def _run_command(args) -> int:
    config = ExperimentConfig.from_config(read_config(args.config), seed=args.seed, runs=args.runs, jobs=args.jobs,
                                           clean=args.clean)
    return Simlab(config, args.out).run()


def _figure_command(args) -> int:
    params = {'gamma': args.gamma, 'window': args.window, 'grid': args.grid,
              'sample_size': args.sample_size, 'seed': args.seed}
    try:
        emit_figure_data(args.kind, params, args.out, QuadratureConfig.from_options(), OptimOptions())
    except KeyboardInterrupt:
        _LOGGER.warning(f"figure '{args.kind}' interrupted")
        return 130
    except SimlabError as e:
        _LOGGER.error(f"figure '{args.kind}' failed: {e}")
        return 1
    return 0


def main(argv=None) -> int:
    """Set up and start simlab."""
    args = build_parser().parse_args(argv)
    logfiles.start()
    _LOGGER.info(f"simlab simulation runner {version.get_version()}, PID is {os.getpid()}")

    try:
        if args.command == 'run':
            return _run_command(args)
        return _figure_command(args)
    except FailedInitialization as e:
        _LOGGER.error(f"{e}")
    except Exception as e:
        _LOGGER.error(f"Unexpected exception: {e}")
    return 1


if __name__ == "__main__":
    # make sure we can run simlab
    if sys.version_info[0] >= 3 and sys.version_info[1] >= 9:
        sys.exit(main())
    else:
        print("python 3.9 or better required")
