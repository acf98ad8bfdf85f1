import os
import threading
from pathlib import Path
from typing import Any, Optional

import pandas as pd

import components.constants as const
import utils.logger as logger
from backend.data_handler import dump_json, write_csv, write_json, write_snapshot
from backend.solver_errors import ValidationError
from backend.solver_models import RotationConstants, RunConfig
from backend.spectral_core import PhysicsParams, WaveField
from components.enums import RunStatus
from utils.benchmark import Benchmark

MANIFEST_FILE = "manifest.json"
LOG_FILE = "run.log"


def run_manifest(config: Optional[RunConfig], results: Optional[dict], command: str, status: RunStatus,
                 wall_time: float, artifacts: list[str], constants: Optional[RotationConstants] = None,
                 error: Optional[BaseException] = None) -> dict:
    """
    Assembles the manifest document of one run.

    Everything except `wall_time_seconds` is a function of the inputs and the code version, so
    two identical runs produce byte-identical manifests apart from that field.

    Args:
        config: Parsed configuration; its echo (defaults included) is recorded. None when the
            config itself failed to parse.
        results: Command-specific summary.
        command: Subcommand name.
        status: Completed or failed.
        wall_time: Seconds spent.
        artifacts: File names written into the run directory.
        constants: Closed-form constants of the run, when they apply (0 < |Ω| < 1).
        error: The exception that ended a failed run.

    Returns:
        dict: The manifest document.
    """
    manifest: dict[str, Any] = {
        "tool": const.APP_NAME,
        "version": const.APP_VERSION,
        "command": command,
        "status": RunStatus(status).value,
        "wall_time_seconds": round(wall_time, 3),
        "config": config.echo if config is not None else None,
        "constants": constants.to_dict() if constants is not None else None,
        "c0": constants.c0 if constants is not None else None,
        "below_c0": bool(config.c < constants.c0) if constants is not None and config is not None else None,
        "artifacts": sorted(set(artifacts)),
        "results": results,
        "failure": None,
    }
    if error is not None:
        manifest["failure"] = {"type": type(error).__name__, "message": str(error)}
    return manifest


class RunManager:
    """
    Owns one run directory: checks that it is writable before any compute starts, serializes
    every write through a single lock, keeps the artifact list and writes the manifest.

    One instance exists per resolved directory path; `initialize` returns the existing one when
    the directory is already managed.
    """

    _instances: dict[Path, "RunManager"] = {}
    _registry_lock = threading.Lock()

    @staticmethod
    def initialize(output_dir: Path, command: str) -> "RunManager":
        """
        Returns the manager of `output_dir`, creating it on first use.

        Args:
            output_dir: Run directory; created when missing.
            command: Subcommand name recorded in the manifest.

        Raises:
            ValidationError: if the directory cannot be written.
        """
        resolved = Path(output_dir).expanduser().resolve()
        with RunManager._registry_lock:
            if resolved not in RunManager._instances:
                RunManager._instances[resolved] = RunManager(resolved, command)
            return RunManager._instances[resolved]

    @staticmethod
    def get_instance(output_dir: Path) -> "RunManager":
        resolved = Path(output_dir).expanduser().resolve()
        if resolved not in RunManager._instances:
            raise Exception(f"⚠️ No RunManager for {resolved}. Call RunManager.initialize() first.")
        return RunManager._instances[resolved]

    def __init__(self, directory: Path, command: str):
        if directory in RunManager._instances:
            raise Exception("⚠️ Use RunManager.get_instance() instead of creating a new instance.")
        self.directory = directory
        self.command = command
        self.artifacts: list[str] = []
        self.constants: Optional[RotationConstants] = None
        self._lock = threading.Lock()
        self._benchmark = Benchmark(f"{command} run")
        self._ensure_writable()
        self.log_path = self.directory / LOG_FILE
        logger.add_file_sink(self.log_path)
        logger.log(f"ℹ️ Run directory: {self.directory}", indent_level=1)

    def _ensure_writable(self) -> None:
        try:
            if not self.directory.exists():
                os.makedirs(self.directory, exist_ok=True)
            marker = self.directory / ".write_check"
            marker.write_text("", encoding="utf-8")
            marker.unlink()
        except OSError as error:
            raise ValidationError(f"⚠️ output_dir {self.directory} is not writable: {error}") from error

    def path(self, name: str) -> Path:
        return self.directory / name

    def _record(self, name: str) -> Path:
        """Lists `name` among the artifacts once and returns its path."""
        if name not in self.artifacts:
            self.artifacts.append(name)
        return self.path(name)

    def save_snapshot(self, name: str, field: WaveField, params: PhysicsParams, c: float) -> Path:
        with self._lock:
            return write_snapshot(self._record(name), field, params, c)

    def save_csv(self, name: str, frame: pd.DataFrame) -> Path:
        with self._lock:
            return write_csv(frame, self._record(name))

    def save_json(self, name: str, data: Any) -> Path:
        with self._lock:
            return write_json(data, self._record(name))

    def write_manifest(self, config: Optional[RunConfig], results: Optional[dict], status: RunStatus,
                       constants: Optional[RotationConstants] = None,
                       error: Optional[BaseException] = None) -> dict:
        """
        Writes manifest.json; the manifest and the run log are listed as artifacts themselves.
        `constants` defaults to the ones the command stored on the manager.
        """
        constants = constants if constants is not None else self.constants
        with self._lock:
            self._record(MANIFEST_FILE)
            self._record(LOG_FILE)
            manifest = run_manifest(config, results, self.command, status, self._benchmark.elapsed(),
                                    self.artifacts, constants, error)
            self.path(MANIFEST_FILE).write_text(dump_json(manifest), encoding="utf-8")
        if status is RunStatus.FAILED:
            logger.log(f"❌ Run failed; manifest written to {self.path(MANIFEST_FILE)}", indent_level=1)
        else:
            logger.log(f"✅ Manifest written to {self.path(MANIFEST_FILE)}", indent_level=1)
        return manifest

    def close(self) -> None:
        # detach the log sink so the next run in this process gets its own file
        self._benchmark.print_time(level=1)
        logger.remove_file_sink(self.log_path)
        with RunManager._registry_lock:
            RunManager._instances.pop(self.directory, None)
