from __future__ import annotations
import os
import sys
import logging
from .services.lattice import Lattice
from dotenv import dotenv_values
from typing import Optional, Any, Dict

THREADS_ENV_VAR = "GP_DISORDER_THREADS"


class GPDisorder:

    def __init__(self,
                 logger: Optional[logging.Logger] = None,
                 verbose: bool = False,
                 threads: Optional[int] = None,
                 *,
                 env_file: Optional[str] = None,
                 ):

        self.verbose = verbose
        self.env_file = env_file

        self._config_logger(logger)

        self.threads = self._resolve_threads(threads)
        self._lattice: Optional[Lattice] = None

    @property
    def lattice(self) -> Lattice:
        """
        Returns
        -------
        An instance of the Lattice service for sampling, solving and studies.
        """
        if self._lattice is None:
            self._lattice = Lattice(self)
        return self._lattice

    # --------------------------------------------------------
    # |                   Internal Helpers                   |
    # --------------------------------------------------------

    def _config_logger(self, logger: Optional[logging.Logger]) -> None:
        """
        Configure the logger for the GPDisorder instance.
            - If a logger is provided by the user, it will be used directly as it is.
            - If no logger is provided, a default logger will be created that outputs to stderr with INFO level,
              so that data written to stdout stays clean.

        Parameters
        ----------
        logger: Optional[logging.Logger]
            An optional logger to use.
        """
        if logger is not None:
            self.logger = logger
        else:
            self.logger = logging.getLogger("gp_disorder._internal")
            self.logger.propagate = False
            self.logger.setLevel(logging.INFO)

            if not self.logger.handlers:
                h = logging.StreamHandler(sys.stderr)
                h.setLevel(logging.INFO)
                h.setFormatter(logging.Formatter("%(message)s"))
                self.logger.addHandler(h)

    def _read_env_file(self) -> Dict[str, str]:
        """
        Env file reader.

        Returns
        -------
        dict
            A dictionary containing the key-value pairs from the env file.
        """
        values = dotenv_values(self.env_file)
        return {k: v for k, v in values.items() if k and v is not None}

    def _resolve_threads(self, threads: Optional[int]) -> int:
        """
        Number of workers used by studies.

        The count is resolved based on the following priority:
            1) The value passed to the constructor.
            2) GP_DISORDER_THREADS in the env file.
            3) GP_DISORDER_THREADS in the process environment.
            4) 1.

        Returns
        -------
        int
            A positive worker count.
        """
        source = "argument"
        value: Any = threads

        if value is None and self.env_file:
            value = self._read_env_file().get(THREADS_ENV_VAR)
            source = f"env file {self.env_file}"

        if value is None:
            value = os.environ.get(THREADS_ENV_VAR)
            source = "environment"

        if value is None or value == "":
            return 1

        try:
            count = int(value)
        except (TypeError, ValueError):
            raise ValueError(f"{THREADS_ENV_VAR} from {source} must be an integer, got {value!r}") from None
        if count < 1:
            raise ValueError(f"{THREADS_ENV_VAR} from {source} must be >= 1, got {count}")
        return count

    # --------------------------------------------------------
    # |                   Exposed Methods                    |
    # --------------------------------------------------------

    def info(self, msg: str, *args: Any) -> None:
        """
        Log an message according to the logging configuration of the GPDisorder instance.

        Parameters
        ----------
        msg: str
            The message to log.
        *args: Any
            Additional arguments to format the message with.
        """
        if self.verbose:
            self.logger.info(msg, *args)
