import csv
import io

import pytest

from kamscale import reference as ref
from kamscale.errors import BudgetExceeded
from kamscale.reproduce import ReproduceConfig, reproduce


def rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_t11_exact(tmp_path):
    rep = reproduce(ReproduceConfig("T11", out_dir=tmp_path, cache_dir=tmp_path / "c"))
    assert not rep.skipped
    got = rows(tmp_path / "T11.csv")
    assert len(got) == 15
    for r in got:
        printed = r["rho1_ref"]
        assert f"{float(r['rho1']):.{len(printed.split('.')[1])}f}" == printed
    for r in got[1:]:
        assert r["A1"][:len(r["A1_ref"])] == r["A1_ref"] or abs(float(r["A1"]) - float(r["A1_ref"])) < 1e-7


def test_budget_exceeded_lists_rows(tmp_path):
    with pytest.raises(BudgetExceeded) as ei:
        reproduce(ReproduceConfig("T1", out_dir=tmp_path, cache_dir=tmp_path / "c"))
    skipped = ei.value.context["skipped"]
    assert len(skipped) == len(ref.T1.ns)
    # the report is still written, with the B and slope columns filled
    got = rows(tmp_path / "T1.csv")
    assert got[0]["B_ref"] == "6.21836" and got[1]["A_ref"] == "0.9399"
    assert (tmp_path / "T1.skipped.txt").exists()


def test_allow_partial(tmp_path):
    rep = reproduce(ReproduceConfig("T1", out_dir=tmp_path, cache_dir=tmp_path / "c", allow_partial=True))
    assert rep.skipped and rep.files[0] == "T1.csv"


def test_deterministic_csv(tmp_path):
    a = reproduce(ReproduceConfig("T13", out_dir=tmp_path / "a")).csv()
    b = reproduce(ReproduceConfig("T13", out_dir=tmp_path / "b")).csv()
    assert a == b
    assert (tmp_path / "a" / "T13.csv").read_bytes() == (tmp_path / "b" / "T13.csv").read_bytes()


def test_f3_writes_gnuplot(tmp_path):
    rep = reproduce(ReproduceConfig("F3", out_dir=tmp_path))
    assert any(f.endswith(".gp") for f in rep.files)
    for f in rep.files:
        assert (tmp_path / f).exists()


def test_unknown_ids(tmp_path):
    with pytest.raises(ValueError):
        reproduce(ReproduceConfig("T99", out_dir=tmp_path))
    with pytest.raises(ValueError):
        reproduce(ReproduceConfig("T1", tier="cluster", out_dir=tmp_path))
