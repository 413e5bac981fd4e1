import numpy as np
import pytest

import multibump as mb
from multibump.errors import ConfigError
from multibump.mesh import LABEL_NAMES, weight_from_descriptor


def test_uniform_1d_grid():
    mesh = mb.build_mesh([(0.0, 5.0)], [501])
    assert mesh.spacing == (0.01,)
    assert mesh.n_interior == 499
    assert mesh.n_total == 501


def test_uniform_2d_grid():
    mesh = mb.build_mesh([(0.0, 1.0), (0.0, 1.0)], [65, 65])
    assert mesh.spacing == (1.0 / 64, 1.0 / 64)
    assert mesh.n_interior == 63 ** 2


def test_degenerate_node_count_rejected():
    with pytest.raises(ConfigError, match="node count 2 < 3"):
        mb.build_mesh([(0.0, 5.0)], [2])


def test_nonpositive_extent_rejected():
    with pytest.raises(ConfigError, match="non-positive length"):
        mb.build_mesh([(1.0, 1.0)], [11])


def test_quadrature_sums_to_volume():
    # interior lumped weights cover the domain up to a boundary layer
    mesh = mb.build_mesh([(0.0, 5.0)], [501])
    assert abs(mesh.quad.sum() - 5.0) <= 2 * 0.01
    mesh2 = mb.build_mesh([(0.0, 1.0), (0.0, 2.0)], [21, 41])
    h = mesh2.spacing[0]
    assert abs(mesh2.quad.sum() - 2.0) <= 2 * h * (2 * (1.0 + 2.0))


def test_embed_restrict_round_trip(rng):
    mesh = mb.build_mesh([(0.0, 1.0), (0.0, 1.0)], [9, 7])
    u = rng.standard_normal(mesh.n_interior)
    full = mesh.embed(u)
    boundary = np.setdiff1d(np.arange(mesh.n_total), mesh.interior)
    assert np.all(full[boundary] == 0.0)
    assert np.array_equal(mesh.restrict(full), u)


class TestWeightField:
    def test_f1_component_intervals(self, mesh_f1, weights_f1):
        # oracle: sign of sin(pi x) evaluated on the grid directly
        x = mesh_f1.coords[:, 0]
        sign = np.sign(np.where(np.abs(np.sin(np.pi * x)) < 1e-12,
                                0.0, np.sin(np.pi * x)))
        labels = weights_f1.labels
        for lab, lo, hi in ((mb.TILDE, 0.0, 1.0), (mb.HAT, 2.0, 3.0),
                            (mb.BAR, 4.0, 5.0)):
            nodes = x[labels == lab]
            assert nodes.size > 0
            assert np.all((nodes > lo) & (nodes < hi))
        assert np.all(sign[labels == mb.NEG] < 0)
        assert np.all(sign[labels == mb.ZERO] == 0)

    def test_f1_component_sizes(self, mesh_f1, weights_f1):
        h = mesh_f1.spacing[0]
        expected = int(1.0 / h)
        for lab in (mb.TILDE, mb.HAT, mb.BAR):
            n = int(np.sum(weights_f1.labels == lab))
            assert abs(n - expected) <= 1

    def test_every_node_labeled_once(self, mesh_f1, weights_f1):
        assert sum(weights_f1.component_sizes().values()) == mesh_f1.n_total

    def test_labeling_deterministic(self, mesh_f1):
        w1 = mb.build_weight_field(mesh_f1, {"kind": "sinusoidal"})
        w2 = mb.build_weight_field(mesh_f1, {"kind": "sinusoidal"})
        assert np.array_equal(w1.labels, w2.labels)
        assert w1.sup_a_plus == w2.sup_a_plus

    def test_single_component_rejected(self, mesh_f1):
        with pytest.raises(ConfigError, match="1 component, need 3"):
            mb.build_weight_field(mesh_f1, np.ones(mesh_f1.n_total))

    def test_empty_positive_set_rejected(self, mesh_f1):
        with pytest.raises(ConfigError, match="0 components"):
            mb.build_weight_field(mesh_f1, -np.ones(mesh_f1.n_total))

    def test_component_order_override(self, mesh_f1):
        w = mb.build_weight_field(mesh_f1, {"kind": "sinusoidal"},
                                  component_order=["bar", "hat", "tilde"])
        x = mesh_f1.coords[:, 0]
        assert np.all(x[w.labels == mb.BAR] < 1.0)
        assert np.all(x[w.labels == mb.TILDE] > 4.0)

    def test_bad_component_order_rejected(self, mesh_f1):
        with pytest.raises(ConfigError, match="permutation"):
            mb.build_weight_field(mesh_f1, {"kind": "sinusoidal"},
                                  component_order=["tilde", "tilde", "bar"])

    def test_2d_strips(self, mesh_2d, weights_2d):
        x = mesh_2d.coords[:, 0]
        assert np.all(x[weights_2d.labels == mb.TILDE] < 1.0)
        assert np.all((x[weights_2d.labels == mb.HAT] > 2.0)
                      & (x[weights_2d.labels == mb.HAT] < 3.0))

    def test_interior_indices_partition(self, mesh_f1, weights_f1):
        counts = sum(weights_f1.interior_indices(lab).size
                     for lab in (mb.TILDE, mb.HAT, mb.BAR, mb.NEG, mb.ZERO))
        assert counts == mesh_f1.n_interior


class TestDescriptors:
    def test_sinusoidal_values(self, mesh_f1):
        fn = weight_from_descriptor({"kind": "sinusoidal", "frequency": 2.0,
                                     "amplitude": 3.0})
        vals = fn(mesh_f1.coords)
        assert np.allclose(vals, 3.0 * np.sin(2 * np.pi * mesh_f1.coords[:, 0]))

    def test_piecewise_linear(self):
        mesh = mb.build_mesh([(0.0, 1.0)], [11])
        fn = weight_from_descriptor({"kind": "piecewise-linear",
                                     "points": [[0.0, -1.0], [1.0, 1.0]]})
        assert np.allclose(fn(mesh.coords), np.linspace(-1, 1, 11))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError, match="unknown weight descriptor kind"):
            weight_from_descriptor({"kind": "gaussian"})

    def test_monotone_breakpoints_required(self):
        with pytest.raises(ConfigError, match="strictly increasing"):
            weight_from_descriptor({"kind": "piecewise-linear",
                                    "points": [[0.0, 1.0], [0.0, 2.0]]})

    def test_label_names_cover_all(self):
        assert set(LABEL_NAMES.values()) == {"tilde", "hat", "bar", "neg", "zero"}
