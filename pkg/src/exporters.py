"""
Data Export Handlers for Multiple Formats
Supports CSV, Parquet and JSON tables, atomic file writes and run manifests
"""

import io
import json
import logging
import os
import subprocess
import tempfile
from abc import ABC, abstractmethod
from datetime import datetime, timezone
from pathlib import Path
from typing import BinaryIO, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import scipy

from .constants import CSV_FLOAT_FORMAT, PACKAGE_VERSION

logger = logging.getLogger(__name__)


class BaseExporter(ABC):
    """Abstract base class for export formats"""

    @abstractmethod
    def export(self, df: pd.DataFrame, buffer: BinaryIO) -> None:
        """
        Export DataFrame to buffer

        Args:
            df (pd.DataFrame): Data to export
            buffer (BinaryIO): Output buffer
        """
        pass

    @abstractmethod
    def get_file_extension(self) -> str:
        """
        Get file extension for this format

        Returns:
            str: File extension (e.g., 'csv', 'json')
        """
        pass


class CSVExporter(BaseExporter):
    """CSV with 17 significant digits so values survive a text round trip"""

    def export(self, df: pd.DataFrame, buffer: BinaryIO) -> None:
        # Convert buffer to text mode for pandas
        text_buffer = io.TextIOWrapper(buffer, encoding='utf-8', newline='', write_through=True)
        df.to_csv(text_buffer, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
        text_buffer.detach()  # Detach to prevent closing the underlying buffer
        buffer.seek(0)

    def get_file_extension(self) -> str:
        return 'csv'


class ParquetExporter(BaseExporter):
    """Columnar format for large snapshot tables (requires pyarrow)"""

    def export(self, df: pd.DataFrame, buffer: BinaryIO) -> None:
        df.to_parquet(buffer, engine='pyarrow', compression='snappy', index=False)
        buffer.seek(0)

    def get_file_extension(self) -> str:
        return 'parquet'


class JSONExporter(BaseExporter):
    """List of row records"""

    def export(self, df: pd.DataFrame, buffer: BinaryIO) -> None:
        text_buffer = io.TextIOWrapper(buffer, encoding='utf-8', write_through=True)
        df.to_json(text_buffer, orient='records', double_precision=15, indent=2)
        text_buffer.detach()
        buffer.seek(0)

    def get_file_extension(self) -> str:
        return 'json'


class ExporterFactory:
    """Factory for creating exporters by format name"""

    _exporters = {
        'csv': CSVExporter,
        'parquet': ParquetExporter,
        'json': JSONExporter,
    }

    @classmethod
    def get_exporter(cls, format_name: str) -> BaseExporter:
        """
        Get exporter instance for format

        Args:
            format_name (str): Format name (csv, parquet, json)

        Returns:
            BaseExporter: Exporter instance

        Raises:
            ValueError: If format is not supported
        """
        format_lower = format_name.lower()

        if format_lower not in cls._exporters:
            supported = ', '.join(cls._exporters.keys())
            raise ValueError(f"Unsupported format: {format_name}. Supported formats: {supported}")

        return cls._exporters[format_lower]()


def export_dataframe(df: pd.DataFrame, format_name: str) -> Tuple[bytes, str]:
    """
    Export DataFrame to specified format

    Args:
        df (pd.DataFrame): Data to export
        format_name (str): Export format

    Returns:
        Tuple[bytes, str]: (encoded table, file_extension)
    """
    exporter = ExporterFactory.get_exporter(format_name)
    buffer = io.BytesIO()
    exporter.export(df, buffer)
    return buffer.getvalue(), exporter.get_file_extension()


def write_atomic(path: Union[str, Path], data: bytes) -> Path:
    """
    Write bytes to a temporary file next to path, then rename into place

    Readers never observe a partially written file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(handle, 'wb') as temp_file:
            temp_file.write(data)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    logger.info(f"Wrote {path}")
    return path


def write_dataframe(df: pd.DataFrame, directory: Union[str, Path], stem: str, format_name: str = 'csv') -> Path:
    """Export a table to directory/stem.<ext> atomically"""
    data, extension = export_dataframe(df, format_name)
    return write_atomic(Path(directory) / f"{stem}.{extension}", data)


def artifact_version() -> str:
    """git describe of the working tree when available, else the package version"""
    try:
        result = subprocess.run(
            ['git', 'describe', '--always', '--dirty'],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5, check=False,
        )
    except (OSError, subprocess.SubprocessError):
        return PACKAGE_VERSION
    described = result.stdout.strip()
    return described if result.returncode == 0 and described else PACKAGE_VERSION


def _jsonable(value):
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def build_manifest(command: str, config: Dict, outputs: List[Union[str, Path]],
                   extra: Optional[Dict] = None) -> Dict:
    """
    Run manifest: command, resolved config, library versions and written files

    Args:
        command (str): Subcommand that produced the outputs
        config (Dict): Resolved settings; re-ingestable as a config file
        outputs (List): Paths written by the command
        extra (Dict, optional): Command-specific fields (tolerances, tables)

    Returns:
        Dict: JSON-serializable manifest
    """
    manifest = {
        'command': command,
        'created': datetime.now(timezone.utc).isoformat(timespec='seconds'),
        'config': _jsonable(config),
        'versions': {
            'artifact': artifact_version(),
            'numpy': np.__version__,
            'scipy': scipy.__version__,
            'pandas': pd.__version__,
        },
        'outputs': [Path(path).name for path in outputs],
    }
    if extra:
        manifest.update(_jsonable(extra))
    return manifest


def write_manifest(directory: Union[str, Path], manifest: Dict) -> Path:
    data = json.dumps(manifest, indent=2, sort_keys=True).encode('utf-8')
    return write_atomic(Path(directory) / 'manifest.json', data)
