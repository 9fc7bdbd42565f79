import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thz_iscap.absorption import (
    Atmosphere,
    DomainError,
    LineModel,
    OutOfBandError,
    TableProvider,
    absorption_coefficient,
    clamped_absorption_coefficient,
    mixing_ratio,
    molecular_loss,
    saturation_pressure,
)

MU = mixing_ratio(Atmosphere())
LINE = LineModel()


def test_saturation_pressure_reference():
    # Pure-water values (3167 Pa, 611.2 Pa) times the moist-air enhancement 1.0042
    assert saturation_pressure(25.0, 101325.0) == pytest.approx(3167 * 1.0042, rel=5e-4)
    assert saturation_pressure(0.0, 101325.0) == pytest.approx(611.21 * 1.0042, rel=5e-4)


def test_mixing_ratio_scales_with_humidity():
    assert MU == pytest.approx(0.0157, rel=0.02)
    assert mixing_ratio(Atmosphere(relative_humidity=0.0)) == 0.0
    assert mixing_ratio(Atmosphere(relative_humidity=1.0)) == pytest.approx(2 * MU)


def test_atmosphere_validation():
    with pytest.raises(DomainError):
        Atmosphere(relative_humidity=1.5)
    with pytest.raises(DomainError):
        Atmosphere(pressure=0.0)


def test_line_model_band_and_magnitude():
    k = absorption_coefficient(300e9, MU, LINE)
    # a few dB/km at 300 GHz in a humid atmosphere
    assert 1e-4 < k < 1e-2
    with pytest.raises(OutOfBandError):
        absorption_coefficient(60e9, MU, LINE)
    with pytest.raises(OutOfBandError):
        absorption_coefficient(500e9, MU, LINE)


@pytest.mark.parametrize("line_ghz", [183.3, 325.2, 380.2, 448.0])
def test_water_lines_are_local_maxima(line_ghz):
    f = line_ghz * 1e9
    k0 = LINE.coefficient(f, MU)
    for off in (-8e9, 8e9):
        if 100e9 <= f + off <= 450e9:
            assert k0 > LINE.coefficient(f + off, MU)


def test_dry_air_only_oxygen_line():
    # With no water vapour only the oxygen line remains.
    k_dry = LINE.coefficient(np.array([118.75e9, 300e9]), 0.0)
    assert k_dry[0] > 10 * k_dry[1]


def test_clamped_coefficient_warns():
    k, warn = clamped_absorption_coefficient(60e9, MU, LINE)
    assert k == LINE.coefficient(100e9, MU)
    assert "60 GHz" in warn
    k, warn = clamped_absorption_coefficient(300e9, MU, LINE)
    assert warn is None


def test_molecular_loss_beer_lambert():
    k = absorption_coefficient(300e9, MU, LINE)
    assert molecular_loss(300e9, 20.0, MU, LINE) == pytest.approx(math.exp(-k * 20.0), rel=1e-15)
    assert molecular_loss(300e9, 0.0, MU, LINE) == 1.0
    with pytest.raises(DomainError):
        molecular_loss(300e9, -1.0, MU, LINE)


@given(st.floats(100e9, 450e9), st.floats(0.0, 500.0), st.floats(0.0, 500.0))
def test_round_trip_loss_squares(f, d1, d2):
    assert molecular_loss(f, d1 + d2, MU, LINE) == pytest.approx(
        molecular_loss(f, d1, MU, LINE) * molecular_loss(f, d2, MU, LINE), rel=1e-12
    )


@given(st.floats(100e9, 450e9), st.floats(0.0, 0.04))
def test_line_model_nonnegative(f, mu):
    assert LINE.coefficient(f, mu) >= 0.0


def test_table_provider_interpolates(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("frequency_hz,k_per_m\n100e9,0.001\n200e9,0.003\n")
    table = TableProvider.from_csv(path)
    assert table.band == (100e9, 200e9)
    assert absorption_coefficient(150e9, 0.0, table) == pytest.approx(0.002)
    with pytest.raises(OutOfBandError):
        absorption_coefficient(250e9, 0.0, table)


@pytest.mark.parametrize(
    "text, message",
    [
        ("freq,k\n1,2\n3,4\n", "header"),
        ("frequency_hz,k_per_m\n1,2\n3\n", ":3:"),
        ("frequency_hz,k_per_m\n1,2\n3,abc\n", ":3:"),
        ("frequency_hz,k_per_m\n3,2\n1,4\n", "increasing"),
        ("frequency_hz,k_per_m\n1,2\n3,-4\n", ">= 0"),
    ],
)
def test_table_provider_errors(tmp_path, text, message):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DomainError, match=message):
        TableProvider.from_csv(path)


def test_vacuum_table():
    assert molecular_loss(300e9, 1e3, 0.0, TableProvider.vacuum()) == 1.0
