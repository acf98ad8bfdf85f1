import threading
from pathlib import Path
from typing import Optional, TextIO

# Constants
INDENT_CHARS = "   "
DEBUG_START_MARKER = "⛔ "
DEBUG_END_MARKER = " ⛔"

# Verbosity levels: 0 silences everything, 1 hides debug lines, 2 shows all
QUIET = 0
NORMAL = 1
VERBOSE = 2

_verbosity = NORMAL
_lock = threading.Lock()
_file_sinks: dict[Path, TextIO] = {}


def set_verbosity(level: int) -> None:
    """Sets the process-wide verbosity (QUIET, NORMAL or VERBOSE)."""
    global _verbosity
    _verbosity = level


def add_file_sink(path: Path) -> None:
    """
    Mirrors every subsequent log line into the given file (appending).

    Parameters:
        path: Path
            Target log file. Its parent directory must exist.
    """
    with _lock:
        if path not in _file_sinks:
            _file_sinks[path] = open(path, "a", encoding="utf-8")


def remove_file_sink(path: Path) -> None:
    with _lock:
        sink = _file_sinks.pop(path, None)
        if sink is not None:
            sink.close()


def _get_debug_markers(debug: bool) -> tuple[str, str]:
    """Returns debug start and end markers if debug is enabled."""
    if debug:
        return DEBUG_START_MARKER, DEBUG_END_MARKER
    return "", ""


def _emit(line: str, sinks: Optional[list[TextIO]] = None, console: bool = True) -> None:
    if console:
        print(line)
    for sink in sinks or []:
        sink.write(line + "\n")
        sink.flush()


def log(message: str, indent_level: int = 0, debug: bool = False, add_line_before: bool = False,
        add_line_after: bool = False) -> None:
    """
    Logs a message with optional indentation and debug markers.

    Prints a given message to the console, optionally prefixed with an indentation
    level and debug markers, and mirrors it into every registered file sink. Lines
    from concurrent workers never interleave. Debug lines are only shown at VERBOSE
    level; at QUIET level only the file sinks receive the line.

    Parameters:
        message: str
            The message to be logged.
        indent_level: int, optional
            The level of indentation for the message. Defaults to 0.
        debug: bool, optional
            A flag indicating if debug markers should be added to the message.
            Defaults to False.
        add_line_before: bool, optional
            Whether to add a line break before the message. Defaults to False.
        add_line_after: bool, optional
            Whether to add a line break after the message. Defaults to False.
    """
    if debug and _verbosity < VERBOSE:
        return
    console = _verbosity != QUIET
    indent_level = 1 if debug else indent_level
    indent = INDENT_CHARS * indent_level
    debug_start, debug_end = _get_debug_markers(debug)
    with _lock:
        sinks = list(_file_sinks.values())
        if add_line_before:
            _emit("", sinks, console)
        _emit(f"{indent}{debug_start}{message}{debug_end}", sinks, console)
        if add_line_after:
            _emit("", sinks, console)
