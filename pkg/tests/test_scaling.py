import csv
import math

import numpy as np
import pytest

import autocat as ac
from autocat.model import HypothesisError
from autocat.scaling import flatness


def test_critical_volume_values():
    assert ac.critical_volume(2, 0.01, "full-symmetric") == 200.0
    assert ac.critical_volume(4, 0.01, "tk-cycle") == 4 / (3 * 0.01)
    assert (ac.critical_volume(2, 0.037, "tk-cycle")
            == ac.critical_volume(2, 0.037, "full-symmetric"))


def test_critical_volume_errors():
    with pytest.raises(HypothesisError):
        ac.critical_volume(3, 0.01, "custom")
    with pytest.raises(ValueError):
        ac.critical_volume(1, 0.01, "full-symmetric")
    with pytest.raises(ValueError):
        ac.critical_volume(2, 0.0, "tk-cycle")


def test_alpha_is_unit_at_critical_volume():
    for d in (2, 3, 5):
        D = 0.013
        V = ac.critical_volume(d, D, "full-symmetric")
        net = ac.apply_volume_scaling(1.0, D, D, V, d)
        alpha = ac.dirichlet_params(net)
        assert np.all(np.abs(alpha - 1.0) <= 1e-14)


def test_theorem4_relation_at_tk_critical_volume():
    for d in (3, 4):
        D = 0.01
        V = ac.critical_volume(d, D, "tk-cycle")
        net = ac.apply_volume_scaling(1.0, D, D, V, d, "tk-cycle")
        kappa = net.kappa[0, 1]
        assert abs(net.delta[0] * (d - 1) - d * kappa) <= 1e-14 * net.delta[0]
        assert isinstance(ac.stationary_mixture(net).conditional,
                          ac.UniformSimplex)


@pytest.mark.parametrize("alpha, expected", [
    ((0.1, 0.1), "boundary-concentrated"),
    ((1.0, 1.0), "flat"),
    ((10.0, 10.0), "interior-unimodal"),
    ((0.5, 2.0), "mixed"),
    ((1.0, 2.0), "mixed"),
])
def test_modality_class(alpha, expected):
    assert ac.modality_class(alpha) == expected


def test_modality_rejects_nonpositive():
    with pytest.raises(ValueError):
        ac.modality_class([0.0, 1.0])


def test_sweep_reproduces_regime_sequence():
    sweep = ac.scaling_sweep(*ac.tk_preset(0.01), [20, 200, 2000], 2)
    assert [r.modality for r in sweep.records] == [
        "boundary-concentrated", "flat", "interior-unimodal"]
    assert [r.reference_n for r in sweep.records] == [40, 400, 4000]
    for rec in sweep.records:
        assert rec.mean == pytest.approx([1.0, 1.0], rel=1e-12)


def test_sweep_flatness_vanishes_at_critical_volume():
    sweep = ac.scaling_sweep(1.0, 0.01, 0.01, [200], 2)
    assert sweep.records[0].flatness <= 1e-12
    for d in (3, 4):
        V = ac.critical_volume(d, 0.01, "tk-cycle")
        sweep_tk = ac.scaling_sweep(1.0, 0.01, 0.01, [V], d, "tk-cycle",
                                    reference_n=12)
        rec = sweep_tk.records[0]
        assert rec.conditional_available
        assert rec.flatness <= 1e-12
        assert rec.alpha == pytest.approx(np.ones(d))


def test_sweep_corner_mass_increases_towards_small_volume():
    sweep = ac.scaling_sweep(1.0, 0.01, 0.01, [1.0, 0.1, 0.01], 2,
                             reference_n=10)
    masses = [r.corner_mass for r in sweep.records]
    assert masses[0] < masses[1] < masses[2] < 1.0


def test_sweep_tk_cycle_off_critical_flags_unavailable():
    sweep = ac.scaling_sweep(1.0, 0.01, 0.01, [20, 400 / 3, 500], 4,
                             "tk-cycle", reference_n=10)
    avail = [r.conditional_available for r in sweep.records]
    assert avail == [False, True, False]
    off = sweep.records[0]
    assert off.modality == "unavailable"
    assert math.isnan(off.flatness) and off.alpha is None
    assert off.mu == pytest.approx(4 * 0.01 * 20 * 20 / (0.01 * 20), rel=1e-12)


def test_sweep_scaled_mean_is_volume_independent_with_unequal_inflows():
    lam_p = [0.011, 0.029]
    sweep = ac.scaling_sweep(1.0, lam_p, 0.01, [5, 50, 500], 2)
    for rec in sweep.records:
        assert rec.mean == pytest.approx([1.1, 2.9], rel=1e-10)


def test_sweep_rejects_bad_grids():
    with pytest.raises(ValueError):
        ac.scaling_sweep(1.0, 0.01, 0.01, [], 2)
    with pytest.raises(ValueError):
        ac.scaling_sweep(1.0, 0.01, 0.01, [10, -1], 2)


def test_flatness_uniform_family_matches_manual():
    cond = ac.DirichletMultinomial(np.array([0.1, 0.1]))
    states = ac.enumerate_simplex(2, 6)
    probs = np.array([ac.conditional_pmf(cond, 6, a) for a in states])
    manual = np.abs(probs - 1 / 7).max()
    assert flatness(cond, 6) == pytest.approx(manual, rel=1e-12)


def test_sweep_csv_export(tmp_path):
    sweep = ac.scaling_sweep(1.0, 0.01, 0.01, [20, 400 / 3, 500], 4,
                             "tk-cycle", reference_n=10)
    path = tmp_path / "sweep.csv"
    ac.write_sweep_csv(sweep, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["V", "alpha_1", "alpha_2", "alpha_3", "alpha_4",
                       "modality", "flatness", "corner_mass",
                       "mean_1", "mean_2", "mean_3", "mean_4", "var_11"]
    assert rows[1][5] == "unavailable" and rows[1][1] == ""
    assert rows[2][5] == "flat"
    assert float(rows[2][1]) == pytest.approx(1.0)
