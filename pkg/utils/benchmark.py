import time

import utils.logger as logger


class Benchmark:
    """
    Manages and calculates the runtime of a process or operation.

    Records the start time when instantiated. `elapsed()` reads the running time without
    stopping the clock (used for manifest wall times), `print_time()` stops it and logs the
    result.
    """

    def __init__(self, name: str):
        self.name = name
        self.start = time.perf_counter()
        self.end = None

    def elapsed(self) -> float:
        """Seconds since start, or the frozen duration once print_time has run."""
        end = self.end if self.end is not None else time.perf_counter()
        return end - self.start

    def print_time(self, add_empty_line: bool = False, level: int = 1):
        """
        Logs the elapsed time in seconds, formatted to two decimal places, together with
        the name of the process.
        """
        self.end = time.perf_counter()
        logger.log(f"🚀 {self.name} took {self.end - self.start:.2f} seconds.", indent_level=level)
        if add_empty_line:
            logger.log("")
