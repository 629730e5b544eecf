import numpy as np
import pytest
from PIL import Image

from config import RunConfig
from exporters import (
    metadata_header, read_csv, read_matrix, read_metadata, spectrum_rows, sweep_frame_name, write_csv,
    write_matrix, write_pgm,
)
from eigensolver import Spectrum
from validators import ValidationError


def test_metadata_header():
    config = RunConfig()
    header = metadata_header(config, "spectrum", N=48, nu=10.0)
    assert header["command"] == "spectrum"
    assert header["N"] == 48
    assert header["quad_points"] == "n/a"
    assert header["config_hash"] == config.config_hash()
    assert header["nu"] == 10.0
    assert header["mode_ordering"].startswith("modes")


def test_csv_with_metadata(tmp_path):
    path = write_csv(tmp_path / "sub" / "data.csv", {"tool": "lab", "nu": 2.5},
                     ["n", "value"], [(0, 0.1), (1, np.float64(1 / 3))])
    assert read_metadata(path) == {"tool": "lab", "nu": "2.5"}
    rows = read_csv(path)
    assert rows[0] == {"n": "0", "value": "0.1"}
    assert float(rows[1]["value"]) == 1 / 3
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# tool: lab"
    assert lines[2] == "n,value"


def test_matrix_file(tmp_path):
    matrix = np.arange(6).reshape(2, 3) * (1 + 2j)
    path = write_matrix(tmp_path / "m.bin", matrix)
    np.testing.assert_array_equal(read_matrix(path), matrix)
    assert path.stat().st_size == 32 + 6 * 16


def test_matrix_file_checks(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOTAMATX" + bytes(24))
    with pytest.raises(ValidationError):
        read_matrix(bad)
    short = tmp_path / "short.bin"
    short.write_bytes(b"RRL")
    with pytest.raises(ValidationError):
        read_matrix(short)
    truncated = tmp_path / "truncated.bin"
    truncated.write_bytes(write_matrix(tmp_path / "ok.bin", np.eye(2)).read_bytes()[:-16])
    with pytest.raises(ValidationError):
        read_matrix(truncated)
    with pytest.raises(ValidationError):
        write_matrix(tmp_path / "vec.bin", np.ones(3))


def test_pgm_orientation(tmp_path):
    occupied = np.zeros((4, 3), dtype=bool)
    occupied[0, 2] = True   # x = 0, largest xi
    occupied[3, 0] = True   # last x, smallest xi
    path = write_pgm(tmp_path / "grid.pgm", occupied)
    assert path.read_bytes().startswith(b"P5")
    with Image.open(path) as image:
        pixels = np.array(image)
    assert pixels.shape == (3, 4)
    assert pixels[0, 0] == 255
    assert pixels[2, 3] == 255
    assert pixels.sum() == 2 * 255


def test_sweep_frame_name():
    assert sweep_frame_name(12.5) == "nu_0012.500.csv"
    assert sweep_frame_name(0) == "nu_0000.000.csv"


def test_spectrum_rows():
    rows = list(spectrum_rows(Spectrum(np.array([0.6j, 0.5]), nu=3.0)))
    assert rows[0] == (3.0, 0, 0.0, 0.6, 0.6)
    assert rows[1][1] == 1
