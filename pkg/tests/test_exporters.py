"""
Unit tests for data exporters
"""

import io
import json

import numpy as np
import pandas as pd
import pytest
from src.exporters import (
    CSVExporter,
    ExporterFactory,
    JSONExporter,
    ParquetExporter,
    build_manifest,
    export_dataframe,
    write_atomic,
    write_dataframe,
    write_manifest,
)


@pytest.fixture
def sample_dataframe():
    """Convergence-style table"""
    return pd.DataFrame({
        'N': [128, 256, 512],
        'E': [8.15e-4, 1.40e-4, 3.49e-5],
        'R': [None, 2.54, 2.0],
        'I2': [1.0, 1.0 - 1e-14, 1.0 + 3e-15],
    })


class TestCSVExporter:
    """Test CSV export functionality"""

    def test_csv_export(self, sample_dataframe):
        exporter = CSVExporter()
        buffer = io.BytesIO()

        exporter.export(sample_dataframe, buffer)

        result = pd.read_csv(buffer)
        assert len(result) == 3
        assert list(result.columns) == ['N', 'E', 'R', 'I2']
        assert np.isnan(result['R'][0])

    def test_full_precision(self, sample_dataframe):
        buffer = io.BytesIO()
        CSVExporter().export(sample_dataframe, buffer)
        result = pd.read_csv(buffer, float_precision='round_trip')
        assert result['I2'].tolist() == sample_dataframe['I2'].tolist()

    def test_csv_extension(self):
        assert CSVExporter().get_file_extension() == 'csv'


class TestParquetExporter:
    """Test Parquet export functionality"""

    def test_parquet_export(self, sample_dataframe):
        buffer = io.BytesIO()
        ParquetExporter().export(sample_dataframe, buffer)

        result = pd.read_parquet(buffer)
        assert len(result) == 3
        assert result['E'].tolist() == sample_dataframe['E'].tolist()

    def test_parquet_extension(self):
        assert ParquetExporter().get_file_extension() == 'parquet'


class TestJSONExporter:
    """Test JSON export functionality"""

    def test_json_records(self, sample_dataframe):
        buffer = io.BytesIO()
        JSONExporter().export(sample_dataframe, buffer)

        records = json.loads(buffer.getvalue().decode('utf-8'))
        assert len(records) == 3
        assert records[1]['N'] == 256
        assert records[0]['R'] is None


class TestExporterFactory:
    """Test exporter factory"""

    @pytest.mark.parametrize("name,cls", [('csv', CSVExporter), ('PARQUET', ParquetExporter), ('json', JSONExporter)])
    def test_get_exporter(self, name, cls):
        assert isinstance(ExporterFactory.get_exporter(name), cls)

    def test_unsupported_format(self):
        with pytest.raises(ValueError, match="Unsupported format"):
            ExporterFactory.get_exporter('hdf5')

    def test_export_dataframe(self, sample_dataframe):
        data, extension = export_dataframe(sample_dataframe, 'csv')
        assert extension == 'csv'
        assert data.startswith(b'N,E,R,I2\n')

    def test_export_dataframe_parquet(self, sample_dataframe):
        data, extension = export_dataframe(sample_dataframe, 'parquet')
        assert extension == 'parquet'
        assert pd.read_parquet(io.BytesIO(data))['N'].tolist() == [128, 256, 512]


class TestAtomicWrites:
    """Test file output"""

    def test_write_atomic_creates_directories(self, tmp_path):
        path = write_atomic(tmp_path / 'nested' / 'out.bin', b'data')
        assert path.read_bytes() == b'data'

    def test_no_temporary_files_left(self, tmp_path):
        write_atomic(tmp_path / 'out.bin', b'first')
        write_atomic(tmp_path / 'out.bin', b'second')
        assert [p.name for p in tmp_path.iterdir()] == ['out.bin']
        assert (tmp_path / 'out.bin').read_bytes() == b'second'

    def test_failed_write_keeps_previous_file(self, tmp_path):
        write_atomic(tmp_path / 'out.bin', b'first')
        with pytest.raises(TypeError):
            write_atomic(tmp_path / 'out.bin', 'not bytes')
        assert (tmp_path / 'out.bin').read_bytes() == b'first'
        assert [p.name for p in tmp_path.iterdir()] == ['out.bin']

    def test_write_dataframe(self, tmp_path, sample_dataframe):
        path = write_dataframe(sample_dataframe, tmp_path, 'convergence', 'parquet')
        assert path.name == 'convergence.parquet'
        assert len(pd.read_parquet(path)) == 3


class TestManifest:
    """Test run manifests"""

    def test_build_manifest(self, tmp_path):
        config = {'model': {'alpha': np.float64(1.5)}, 'solver': {'n_modes': np.int64(64)}}
        manifest = build_manifest('solve', config, [tmp_path / 'final.csv'], extra={'tolerance': 1e-12})

        assert manifest['command'] == 'solve'
        assert manifest['outputs'] == ['final.csv']
        assert manifest['tolerance'] == 1e-12
        assert set(manifest['versions']) == {'artifact', 'numpy', 'scipy', 'pandas'}
        json.dumps(manifest)

    def test_write_manifest(self, tmp_path):
        manifest = build_manifest('converge', {'model': {'alpha': 2.0}}, [])
        path = write_manifest(tmp_path, manifest)
        assert path.name == 'manifest.json'
        assert json.loads(path.read_text())['config'] == {'model': {'alpha': 2.0}}
