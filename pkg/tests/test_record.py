import numpy as np
import pytest

import owfsim as o
from owfsim.record import RunRecord, column_names


def test_column_names_layout():
    names = column_names(2)
    assert names[0] == "t"
    assert names[-3:] == ["v_on", "v_dc_off", "i_dc"]
    assert "p_virt_1" in names and "p_virt_2" in names
    assert len(names) == 1 + 2 * 12 + 3
    assert len(set(names)) == len(names)


@pytest.fixture(scope="module")
def short_record():
    return o.run(o.get_preset("blackstart-virtual"),
                 o.SimConfig(dt_plant=100e-6, t_end=0.1))


def test_csv_round_trip_is_exact(short_record, tmp_path):
    path = tmp_path / "run.csv"
    short_record.to_csv(path)
    back = RunRecord.from_csv(path)
    assert back.status == short_record.status
    assert back.diverged_at == short_record.diverged_at
    assert back.header == short_record.header
    for name in short_record.columns:
        assert np.array_equal(back.columns[name], short_record.columns[name]), name


def test_csv_write_is_bit_identical(short_record, tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    short_record.to_csv(p1)
    short_record.to_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_from_csv_requires_header(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,v\n0.0,1.0\n")
    with pytest.raises(ValueError, match="missing JSON header"):
        RunRecord.from_csv(bad)


def test_col_accessor(short_record):
    assert np.array_equal(short_record.col("p", 1), short_record.columns["p_1"])
    assert np.array_equal(short_record.col("t"), short_record.columns["t"])
