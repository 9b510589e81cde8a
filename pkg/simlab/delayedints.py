"""Holds SIGINT and SIGTERM back while a block runs and replays the signal on exit.

Used around runner startup/shutdown and around every CSV write.  Worker
processes forked by the run pool inherit the parent's handlers; by default a
signal arriving in a worker is dropped and the parent decides what to do.
"""

import os
import signal
import logging


_LOGGER = logging.getLogger('simlab')

SIGNAL_NAMES = {
    signal.SIGINT: 'SIGINT',
    signal.SIGTERM: 'SIGTERM',
}


class DelayedKeyboardInterrupt:
    def __init__(self, propagate_to_forked_processes=None):
        """
        propagate_to_forked_processes: True handles signals in forked children like
        in the parent, False hands them to the original handler at once, None
        (default) ignores them in children.
        """
        self._pid = os.getpid()
        self._propagate = propagate_to_forked_processes
        self._received = None
        self._saved_handlers = {}

    @property
    def pending(self) -> bool:
        return self._received is not None

    def __enter__(self):
        self._saved_handlers = {sig: signal.signal(sig, self._handler) for sig in SIGNAL_NAMES}
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        for sig, handler in self._saved_handlers.items():
            signal.signal(sig, handler)

        if self._received is None:
            return
        sig, frame = self._received
        self._replay(sig, frame)

    def _replay(self, sig, frame):
        handler = self._saved_handlers.get(sig)
        if callable(handler):
            handler(sig, frame)
        elif handler == signal.SIG_DFL and sig == signal.SIGINT:
            raise KeyboardInterrupt

    def _handler(self, sig, frame):
        if os.getpid() != self._pid:
            if self._propagate is False:
                _LOGGER.info(f"{SIGNAL_NAMES[sig]} received in worker {os.getpid()}, calling the original handler")
                self._replay(sig, frame)
                return
            if self._propagate is None:
                _LOGGER.debug(f"{SIGNAL_NAMES[sig]} received in worker {os.getpid()}, ignored")
                return

        self._received = (sig, frame)
        _LOGGER.info(f"{SIGNAL_NAMES[sig]} received, delayed until the current block finishes")
