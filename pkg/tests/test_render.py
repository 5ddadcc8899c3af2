import numpy as np
import pytest

from vit1d.analysis import self_similarity
from vit1d.errors import CorruptCheckpointError, RenderError
from vit1d.tensorio import read_matrix, render_matrix, render_pgm, render_svg, to_gray, write_matrix


def parse_pgm(data: bytes) -> np.ndarray:
    magic, dims, maxval, rest = data.split(b"\n", 3)
    assert magic == b"P5" and maxval == b"255"
    w, h = map(int, dims.split())
    return np.frombuffer(rest, np.uint8).reshape(h, w)


def test_checkerboard():
    assert parse_pgm(render_pgm(np.array([[0.0, 1.0], [1.0, 0.0]]))).tolist() == [[0, 255], [255, 0]]


def test_constant_is_mid_gray():
    assert np.all(to_gray(np.full((3, 4), 7.0)) == 128)


def test_symmetric_ssm_gives_symmetric_image(rng):
    s = self_similarity(rng.normal(size=(30, 8)))
    img = parse_pgm(render_pgm(s))
    assert np.array_equal(img, img.T)


def test_deterministic_bytes(tmp_path, rng):
    m = rng.normal(size=(5, 6))
    write_matrix(tmp_path / "m.mat", m)
    a = render_matrix(tmp_path / "m.mat", tmp_path / "a.svg").read_bytes()
    b = render_matrix(tmp_path / "m.mat", tmp_path / "b.svg").read_bytes()
    assert a == b and a.startswith(b"<svg")
    assert render_svg(m).count("<rect") == 30


def test_non_finite_and_bad_suffix(tmp_path):
    with pytest.raises(RenderError):
        render_pgm(np.array([[0.0, np.inf]]))
    with pytest.raises(RenderError):
        render_matrix(np.eye(2), tmp_path / "x.png")


def test_matrix_file_round_trip(tmp_path, rng):
    m = rng.normal(size=(4, 3)).astype(np.float32)
    write_matrix(tmp_path / "m.mat", m, track_id="t1", dim=3)
    back, head = read_matrix(tmp_path / "m.mat")
    assert np.array_equal(back, m) and head["track_id"] == "t1" and head["shape"] == [4, 3]
    raw = (tmp_path / "m.mat").read_bytes()
    (tmp_path / "m.mat").write_bytes(raw[:-2])
    with pytest.raises(CorruptCheckpointError):
        read_matrix(tmp_path / "m.mat")
