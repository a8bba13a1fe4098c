"""File format round trips and corruption handling."""

import numpy as np
import pytest

from rigalign.generate import FeatureMatrix, Graph, sample_correlated_pair, sample_rig
from rigalign.io import (
    load_pair_npz,
    read_instance,
    read_permutation,
    save_pair_npz,
    write_edge_list,
    write_instance,
    write_permutation,
)
from rigalign.params import ModelParams, NoiseParams


@pytest.fixture
def instance():
    p = ModelParams(n=37, d=29, t=2, s=5.0)  # d deliberately not a byte multiple
    fm, g = sample_rig(p, seed=31)
    return p, fm, g


class TestBinaryInstance:
    def test_round_trip(self, tmp_path, instance):
        p, fm, g = instance
        path = tmp_path / "truth.rig"
        write_instance(path, fm, g, p.t)
        fm2, g2, t2 = read_instance(path)
        assert fm2 == fm
        assert np.array_equal(g2.edges, g.edges)
        assert t2 == p.t

    def test_layout_bytes(self, tmp_path):
        # n=2, d=9: row 0 has ones at {0, 8}, row 1 at {3}; one edge (0, 1)
        fm = FeatureMatrix.from_dense(
            np.array([[1, 0, 0, 0, 0, 0, 0, 0, 1], [0, 0, 0, 1, 0, 0, 0, 0, 0]])
        )
        g = Graph(2, np.array([[0, 1]], dtype=np.uint32))
        path = tmp_path / "tiny.rig"
        write_instance(path, fm, g, 1)
        blob = path.read_bytes()
        want = (
            (2).to_bytes(4, "little")
            + (9).to_bytes(4, "little")
            + (1).to_bytes(4, "little")
            + bytes([0b00000001, 0b00000001])  # row 0: bit 0 of each byte
            + bytes([0b00001000, 0b00000000])  # row 1: bit 3 of byte 0
            + (0).to_bytes(4, "little")
            + (1).to_bytes(4, "little")
        )
        assert blob == want

    def test_truncated_file_rejected(self, tmp_path, instance):
        p, fm, g = instance
        path = tmp_path / "cut.rig"
        write_instance(path, fm, g, p.t)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 3])
        with pytest.raises(ValueError, match="cut.rig"):
            read_instance(path)

    def test_bad_edges_rejected(self, tmp_path):
        fm = FeatureMatrix.from_dense(np.eye(3, 5, dtype=np.uint8))
        g = Graph(3, np.array([[0, 1]], dtype=np.uint32))
        path = tmp_path / "bad.rig"
        write_instance(path, fm, g, 1)
        blob = bytearray(path.read_bytes())
        blob[-8:] = (7).to_bytes(4, "little") + (9).to_bytes(4, "little")
        path.write_bytes(bytes(blob))
        with pytest.raises(ValueError):
            read_instance(path)


class TestTextFormats:
    def test_edge_list(self, tmp_path):
        g = Graph(4, np.array([[0, 2], [1, 3]], dtype=np.uint32))
        path = tmp_path / "g.edges"
        write_edge_list(path, g)
        assert path.read_text() == "0 2\n1 3\n"

    def test_permutation_round_trip(self, tmp_path):
        perm = np.array([2, 0, 3, 1])
        path = tmp_path / "map.perm"
        write_permutation(path, perm)
        text = path.read_text().splitlines()
        assert text[0] == "n=4"
        assert text[1:] == ["2", "0", "3", "1"]
        assert np.array_equal(read_permutation(path), perm)

    def test_permutation_rejects_non_bijection(self, tmp_path):
        path = tmp_path / "bad.perm"
        path.write_text("n=3\n0\n0\n2\n")
        with pytest.raises(ValueError):
            read_permutation(path)


class TestPairArchive:
    def test_round_trip(self, tmp_path):
        p = ModelParams(n=25, d=16, t=1, s=3.0)
        noise = NoiseParams(sigma=0.4, q=0.7)
        inst = sample_correlated_pair(p, noise, seed=33)
        path = tmp_path / "pair.npz"
        save_pair_npz(path, inst, p, noise)
        inst2, p2, noise2 = load_pair_npz(path)
        assert p2 == p
        assert noise2 == noise
        assert inst2.truth == inst.truth
        assert np.array_equal(inst2.hidden_perm, inst.hidden_perm)
        assert np.array_equal(inst2.first.features, inst.first.features)
        assert np.array_equal(inst2.second.features, inst.second.features)
        assert np.array_equal(inst2.base.edges, inst.base.edges)
        assert np.array_equal(inst2.first.graph.edges, inst.first.graph.edges)
        assert np.array_equal(inst2.second.graph.edges, inst.second.graph.edges)
