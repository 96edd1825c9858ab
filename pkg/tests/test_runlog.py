import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphlab.errors import DatasetParseError
from morphlab.runlog import (CSV_HEADER, EpochMetrics, format_row,
                             read_metrics_csv, write_metrics_csv)


def row(**kw):
    base = dict(epoch=1, phase="seeding", train_loss=1.25, test_error=0.5,
                mr=0.9, mp=0.8, lr=0.7, lp=0.6, f1=0.65, tau_hat=0.4,
                mem_size=120, safe_size=None, learn_rate=0.1, ramp_w=None)
    base.update(kw)
    return EpochMetrics(**base)


def test_format_known_row():
    assert format_row(row()) == ("1,seeding,1.250000,0.500000,0.900000,"
                                 "0.800000,0.700000,0.600000,0.650000,"
                                 "0.400000,120,NA,0.100000,NA")


def test_na_sentinels_never_zero():
    r = format_row(row(mr=None, mp=None, tau_hat=None))
    parts = r.split(",")
    assert parts[4] == parts[5] == parts[9] == "NA"


def test_write_read_roundtrip(tmp_path):
    rows = [row(), row(epoch=2, phase="evolution", safe_size=80, ramp_w=3.2,
                      tau_hat=None, mp=None)]
    p = tmp_path / "m.csv"
    write_metrics_csv(p, rows)
    back = read_metrics_csv(p)
    assert [format_row(m) for m in back] == [format_row(m) for m in rows]


def test_read_rejects_bad_header(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("epoch,phase\n1,seeding\n")
    with pytest.raises(DatasetParseError) as ei:
        read_metrics_csv(p)
    assert ei.value.line_number == 1


def test_read_rejects_bad_phase(tmp_path):
    p = tmp_path / "m.csv"
    write_metrics_csv(p, [row()])
    lines = p.read_text().splitlines()
    lines[1] = lines[1].replace("seeding", "warming")
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetParseError) as ei:
        read_metrics_csv(p)
    assert ei.value.line_number == 2


def test_read_rejects_short_row(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(CSV_HEADER + "\n1,seeding,0.5\n")
    with pytest.raises(DatasetParseError):
        read_metrics_csv(p)


def test_read_rejects_non_numeric(tmp_path):
    p = tmp_path / "m.csv"
    write_metrics_csv(p, [row()])
    txt = p.read_text().replace("0.500000", "oops")
    p.write_text(txt)
    with pytest.raises(DatasetParseError) as ei:
        read_metrics_csv(p)
    assert ei.value.line_number == 2


opt_float = st.one_of(st.none(), st.floats(0, 100, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(epoch=st.integers(1, 10_000),
       phase=st.sampled_from(["seeding", "evolution"]),
       train_loss=opt_float, test_error=st.floats(0, 1, allow_nan=False),
       mr=opt_float, mp=opt_float, tau_hat=opt_float,
       mem_size=st.one_of(st.none(), st.integers(0, 10_000)),
       safe_size=st.one_of(st.none(), st.integers(0, 10_000)),
       ramp_w=opt_float)
def test_roundtrip_property(tmp_path_factory, epoch, phase, train_loss,
                            test_error, mr, mp, tau_hat, mem_size,
                            safe_size, ramp_w):
    r = row(epoch=epoch, phase=phase, train_loss=train_loss,
            test_error=test_error, mr=mr, mp=mp, tau_hat=tau_hat,
            mem_size=mem_size, safe_size=safe_size, ramp_w=ramp_w)
    p = tmp_path_factory.mktemp("rt") / "m.csv"
    write_metrics_csv(p, [r])
    (back,) = read_metrics_csv(p)
    # round-trip is exact at the serialized precision
    assert format_row(back) == format_row(r)
    assert (back.mem_size is None) == (mem_size is None)
    assert (back.tau_hat is None) == (tau_hat is None)
