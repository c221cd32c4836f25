"""
Logging system for fluxtrade

Module code logs through logging.getLogger(__name__); every such logger sits
under the "fluxtrade" root configured here. Tables go to stdout, so log
records always go to stderr or a file.
"""
import logging
import sys
from pathlib import Path
from typing import Optional

CONSOLE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
FILE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def _level(name: str) -> int:
    level = logging.getLevelName(name.upper())
    if not isinstance(level, int):
        raise ValueError(f"unknown log level '{name}'")
    return level


class FluxtradeLogger:
    """Run-level log helpers on top of the "fluxtrade" logger"""

    def __init__(
        self,
        name: str = "fluxtrade",
        level: str = "INFO",
        log_file: Optional[str] = None,
        console: bool = True
    ):
        self.logger = logging.getLogger(name)
        self.level = _level(level)
        self.logger.setLevel(self.level)
        self.logger.handlers.clear()

        if console:
            self._attach(logging.StreamHandler(sys.stderr), logging.Formatter(CONSOLE_FORMAT, DATE_FORMAT))
        if log_file:
            Path(log_file).parent.mkdir(parents=True, exist_ok=True)
            self._attach(logging.FileHandler(log_file), logging.Formatter(FILE_FORMAT))

    def _attach(self, handler: logging.Handler, formatter: logging.Formatter):
        handler.setLevel(self.level)
        handler.setFormatter(formatter)
        self.logger.addHandler(handler)

    def info(self, msg: str):
        self.logger.info(msg)

    def warning(self, msg: str):
        self.logger.warning(msg)

    # Sweep and command events

    def log_sweep_point(self, r_imp: float, r_j: float, phase: str, dimension: int):
        self.logger.info(f"Point r_imp={r_imp:.6g} r_j={r_j:.6g}: {phase} (N={dimension})")

    def log_point_failure(self, r_imp: float, r_j: float, error: str):
        self.logger.warning(f"Point r_imp={r_imp:.6g} r_j={r_j:.6g} failed: {error}")

    def log_calibration(self, alpha: float, gamma: float, m_phi_sq: float, temperature: float):
        """Record the bath coupling inferred from a measured rate"""
        self.logger.info(
            f"Calibrated alpha={alpha:.6e} from gamma={gamma:.6g}/s "
            f"at M_phi^2={m_phi_sq:.6g}, T={temperature:.6g} K"
        )

    def log_out_of_regime(self, p_leak: float, p_dephase: float):
        self.logger.warning(
            f"Error budget out of regime: p_leak={p_leak:.3e}, p_dephase={p_dephase:.3e}"
        )

    def log_run_complete(self, command: str, rows: int, failed: int, destination: str):
        self.logger.info(f"{command} complete: {rows} rows ({failed} failed) -> {destination}")


_global_logger: Optional[FluxtradeLogger] = None


def get_logger() -> FluxtradeLogger:
    """Get or create global logger"""
    global _global_logger
    if _global_logger is None:
        _global_logger = FluxtradeLogger()
    return _global_logger


def setup_logger(level: str = "INFO", log_file: Optional[str] = None) -> FluxtradeLogger:
    """Replace the global logger, e.g. after reading --log-level"""
    global _global_logger
    _global_logger = FluxtradeLogger(level=level, log_file=log_file)
    return _global_logger
