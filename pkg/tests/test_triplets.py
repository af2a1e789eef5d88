"""Construction of the seven representation classes, tag parsing, spectrum
classification, and helicity."""

import numpy as np
import pytest

from freeparticle.grid import build_grid, gaussian_packet
from freeparticle.operators import Linearity, sample_states
from freeparticle.triplets import (
    TripletClass,
    helicity_expectation,
    make_triplet,
    parse_class_tag,
    spectrum_class,
)

ALL_CLASSES = list(TripletClass)


def _grid_for(cls, n=8):
    return build_grid(n, 6.0, 1.0 if cls.is_massive else 0.0, blocks=cls.blocks)


@pytest.mark.parametrize("cls", ALL_CLASSES, ids=[c.value for c in ALL_CLASSES])
def test_every_class_constructs(cls):
    t = make_triplet(cls, _grid_for(cls))
    gens = t.generators()
    assert set(gens) == {"P0", "P1", "P2", "P3", "J1", "J2", "J3", "K1", "K2", "K3"}
    assert t.energy_signs == cls.energy_signs
    assert t.grid.blocks == cls.blocks


def test_make_triplet_accepts_string_names():
    t = make_triplet("massive_plus", build_grid(8, 6.0, 1.0))
    assert t.family is TripletClass.MASSIVE_PLUS


def test_class_and_grid_block_mismatch_rejected():
    with pytest.raises(ValueError):
        make_triplet(TripletClass.MASSIVE_PM_1, build_grid(8, 6.0, 1.0, blocks=1))
    with pytest.raises(ValueError):
        make_triplet(TripletClass.MASSIVE_PLUS, build_grid(8, 6.0, 1.0, blocks=2))


def test_mass_constraints():
    with pytest.raises(ValueError):
        make_triplet(TripletClass.MASSIVE_PLUS, build_grid(8, 6.0, 0.0))
    with pytest.raises(ValueError):
        make_triplet(TripletClass.MASSLESS_PM, build_grid(8, 6.0, 1.0, blocks=2))


def test_coupling_constraints():
    g = build_grid(8, 6.0, 0.0, blocks=2)
    with pytest.raises(ValueError):
        make_triplet(TripletClass.MASSLESS_PM, g, m=1.5)  # not an integer
    with pytest.raises(ValueError):
        make_triplet(TripletClass.MASSIVE_PM_1, build_grid(8, 6.0, 1.0, blocks=2), m=2)


def test_parse_class_tag():
    assert parse_class_tag("massive_plus") == (TripletClass.MASSIVE_PLUS, 0, 1)
    assert parse_class_tag("massless_pm:m=2") == (TripletClass.MASSLESS_PM, 2, 1)
    assert parse_class_tag("massless_pm:m=-4:pair=3") == (TripletClass.MASSLESS_PM, -4, 3)
    with pytest.raises(ValueError):
        parse_class_tag("massive_sideways")
    with pytest.raises(ValueError):
        parse_class_tag("massive_plus:spin=1")


def test_coupled_massless_class_has_no_inversions():
    g = build_grid(8, 6.0, 0.0, blocks=2)
    t = make_triplet(TripletClass.MASSLESS_PM, g, m=2)
    assert not t.has_inversions
    with pytest.raises(ValueError):
        t.S
    with pytest.raises(ValueError):
        t.T


def test_uncoupled_massless_pairs_all_construct():
    g = build_grid(8, 6.0, 0.0, blocks=2)
    for pair in (1, 2, 3):
        t = make_triplet(TripletClass.MASSLESS_PM, g, st_pair=pair)
        assert t.has_inversions
    with pytest.raises(ValueError):
        make_triplet(TripletClass.MASSLESS_PM, g, st_pair=4)


@pytest.mark.parametrize("cls,expected", [
    (TripletClass.MASSIVE_PLUS, "POSITIVE"),
    (TripletClass.MASSIVE_MINUS, "NEGATIVE"),
    (TripletClass.MASSIVE_PM_1, "BOTH"),
    (TripletClass.MASSIVE_PM_2, "BOTH"),
    (TripletClass.MASSLESS_PLUS, "POSITIVE"),
    (TripletClass.MASSLESS_MINUS, "NEGATIVE"),
    (TripletClass.MASSLESS_PM, "BOTH"),
], ids=[c.value for c in ALL_CLASSES])
def test_spectrum_trichotomy(cls, expected):
    t = make_triplet(cls, _grid_for(cls))
    assert spectrum_class(t) == expected
    assert t.predicted_spectrum == expected


@pytest.mark.parametrize("cls", ALL_CLASSES, ids=[c.value for c in ALL_CLASSES])
def test_both_sided_spectrum_iff_unitary_T_or_antiunitary_S(cls):
    t = make_triplet(cls, _grid_for(cls))
    if not t.has_inversions:
        pytest.skip("generator-only construction")
    t_unitary = t.time_reversal.linearity is Linearity.LINEAR
    s_antiunitary = t.space_inversion.linearity is Linearity.CONJUGATE_LINEAR
    assert (spectrum_class(t) == "BOTH") == (t_unitary or s_antiunitary)


def test_pm_block_energies_cancel():
    g = build_grid(8, 6.0, 1.0, blocks=2)
    t = make_triplet(TripletClass.MASSIVE_PM_1, g)
    pkt = gaussian_packet(g, (1.0, 0.0, 0.0), 1.2, block_weights=(1.0, 1.0))
    moment = complex(pkt.inner(t.P0(pkt)))
    assert abs(moment) <= 1e-12


def test_helicity_expectation_values():
    g = build_grid(8, 6.0, 0.0, blocks=2)
    samples = sample_states(g, kind="wave")
    for m in (0, 2, -4):
        t = make_triplet(TripletClass.MASSLESS_PM, g, m=m)
        lam = helicity_expectation(t, samples[0])
        assert lam[0] == pytest.approx(m / 2.0, abs=1e-9)
        assert lam[1] == pytest.approx(-m / 2.0, abs=1e-9)


def test_helicity_rejects_massive():
    t = make_triplet(TripletClass.MASSIVE_PLUS, build_grid(8, 6.0, 1.0))
    with pytest.raises(ValueError):
        helicity_expectation(t, gaussian_packet(t.grid, (1.0, 0.0, 0.0), 1.2))


def test_tag_round_trip():
    g = build_grid(8, 6.0, 0.0, blocks=2)
    t = make_triplet(TripletClass.MASSLESS_PM, g, m=2)
    cls, m, _pair = parse_class_tag(t.tag)
    assert cls is TripletClass.MASSLESS_PM and m == 2
