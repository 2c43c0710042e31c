"""Tabular input loading, validation, and round-trips."""

import numpy as np
import pytest

from droughtimpact import ingest
from droughtimpact.errors import ValidationError
from droughtimpact.months import format_month, parse_month, season_of


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestMonths:
    def test_parse_format_roundtrip(self):
        for text in ("1995-06", "2011-01", "0001-12"):
            assert format_month(parse_month(text)) == text

    def test_consecutive(self):
        assert parse_month("1999-12") + 1 == parse_month("2000-01")

    @pytest.mark.parametrize("bad", ["1995-13", "1995-00", "95-06", "1995/06", "junk"])
    def test_malformed(self, bad):
        with pytest.raises(ValidationError, match="malformed month"):
            parse_month(bad)

    def test_seasons(self):
        assert season_of(1) == "DJF"
        assert season_of(12) == "DJF"
        assert season_of(4) == "MAM"
        assert season_of(7) == "JJA"
        assert season_of(10) == "SON"


class TestLoadPrecip:
    def test_two_regions_count_preserved(self, tmp_path):
        lines = ["region_id,month,precip_mm"]
        for region in ("A", "B"):
            for i in range(360):
                lines.append(f"{region},{format_month(parse_month('1981-01') + i)},{10.0 + i % 7}")
        series = ingest.load_precip(write(tmp_path / "p.csv", "\n".join(lines) + "\n"))
        assert [s.region_id for s in series] == ["A", "B"]
        assert all(len(s) == 360 for s in series)

    def test_gap_names_region_and_month(self, tmp_path):
        lines = ["region_id,month,precip_mm",
                 "A,1995-04,1.0", "A,1995-05,2.0", "A,1995-07,3.0"]
        with pytest.raises(ValidationError, match="region A.*1995-06"):
            ingest.load_precip(write(tmp_path / "p.csv", "\n".join(lines) + "\n"))

    def test_negative_depth_cites_row(self, tmp_path):
        lines = ["region_id,month,precip_mm"]
        for i in range(20):
            lines.append(f"A,{format_month(parse_month('2000-01') + i)},1.0")
        lines[16] = "A,2000-04,-3.0"  # file line 17
        with pytest.raises(ValidationError, match="row 17"):
            ingest.load_precip(write(tmp_path / "p.csv", "\n".join(lines) + "\n"))

    def test_duplicate_month_rejected(self, tmp_path):
        text = "region_id,month,precip_mm\nA,2000-01,1.0\nA,2000-01,2.0\n"
        with pytest.raises(ValidationError, match="duplicate"):
            ingest.load_precip(write(tmp_path / "p.csv", text))

    def test_header_enforced_bit_exactly(self, tmp_path):
        text = "region,month,precip_mm\nA,2000-01,1.0\n"
        with pytest.raises(ValidationError, match="header mismatch"):
            ingest.load_precip(write(tmp_path / "p.csv", text))

    def test_unknown_extra_column_rejected(self, tmp_path):
        text = "region_id,month,precip_mm,extra\nA,2000-01,1.0,x\n"
        with pytest.raises(ValidationError, match="header mismatch"):
            ingest.load_precip(write(tmp_path / "p.csv", text))

    def test_non_numeric_depth(self, tmp_path):
        text = "region_id,month,precip_mm\nA,2000-01,wet\n"
        with pytest.raises(ValidationError, match="not a number"):
            ingest.load_precip(write(tmp_path / "p.csv", text))

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            ingest.load_precip(tmp_path / "nope.csv")


class TestLoadImpacts:
    def test_valid_row_accepted(self, tmp_path):
        text = "region_id,month,category,count\nTX-001,2011-07,fire,3\n"
        records = ingest.load_impacts(write(tmp_path / "i.csv", text))
        assert records == [ingest.ImpactRecord("TX-001", parse_month("2011-07"), "fire", 3)]

    def test_unknown_category_lists_all_nine(self, tmp_path):
        text = "region_id,month,category,count\nA,2011-07,weather,1\n"
        with pytest.raises(ValidationError) as err:
            ingest.load_impacts(write(tmp_path / "i.csv", text))
        for category in ingest.CATEGORIES:
            assert category in str(err.value)
        assert len(ingest.CATEGORIES) == 9

    def test_zero_count_accepted(self, tmp_path):
        text = "region_id,month,category,count\nA,2011-07,fire,0\n"
        assert ingest.load_impacts(write(tmp_path / "i.csv", text))[0].count == 0

    def test_negative_count_rejected(self, tmp_path):
        text = "region_id,month,category,count\nA,2011-07,fire,-1\n"
        with pytest.raises(ValidationError, match="count"):
            ingest.load_impacts(write(tmp_path / "i.csv", text))

    def test_malformed_date_rejected(self, tmp_path):
        text = "region_id,month,category,count\nA,07-2011,fire,1\n"
        with pytest.raises(ValidationError, match="malformed month"):
            ingest.load_impacts(write(tmp_path / "i.csv", text))


class TestLoadRegions:
    def test_valid_file(self, tmp_path):
        text = "region_id,lc,phr,rwpd,taesd\nA,forest,p1,w1,d1\nB,cropland,p2,w1,d2\n"
        regions = ingest.load_regions(write(tmp_path / "r.csv", text))
        assert sorted(regions) == ["A", "B"]
        assert regions["A"].lc == "forest"

    def test_duplicate_region_rejected(self, tmp_path):
        text = "region_id,lc,phr,rwpd,taesd\nA,f,p,w,d\nA,f,p,w,d\n"
        with pytest.raises(ValidationError, match="duplicate region A"):
            ingest.load_regions(write(tmp_path / "r.csv", text))

    def test_cross_reference_error(self, tmp_path):
        text = "region_id,lc,phr,rwpd,taesd\nA,f,p,w,d\n"
        with pytest.raises(ValidationError, match="absent here: B"):
            ingest.load_regions(write(tmp_path / "r.csv", text), require_regions=["A", "B"])


class TestRoundTrip:
    def test_precip_roundtrip_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        original = [
            ingest.MonthlySeries("A", parse_month("1990-01"), rng.gamma(2, 30, 48)),
            ingest.MonthlySeries("B", parse_month("1985-06"), rng.gamma(3, 10, 60)),
        ]
        path = tmp_path / "p.csv"
        ingest.write_precip(path, original)
        reloaded = ingest.load_precip(path)
        assert len(reloaded) == 2
        for a, b in zip(original, reloaded):
            assert a.region_id == b.region_id and a.start == b.start
            assert np.array_equal(a.values, b.values)

    def test_impacts_roundtrip_identical(self, tmp_path):
        records = [
            ingest.ImpactRecord("A", parse_month("2011-07"), "fire", 3),
            ingest.ImpactRecord("B", parse_month("2012-01"), "agriculture", 1),
        ]
        path = tmp_path / "i.csv"
        ingest.write_impacts(path, records)
        assert ingest.load_impacts(path) == sorted(records, key=lambda r: r.region_id)

    def test_regions_roundtrip_identical(self, tmp_path):
        regions = {
            "A": ingest.RegionAttributes("A", "forest", "p1", "w1", "d1"),
            "B": ingest.RegionAttributes("B", "cropland", "p2", "w2", "d2"),
        }
        path = tmp_path / "r.csv"
        ingest.write_regions(path, regions)
        assert ingest.load_regions(path) == regions

    def test_write_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(1)
        series = [ingest.MonthlySeries("A", 0, rng.gamma(2, 30, 24))]
        ingest.write_precip(tmp_path / "a.csv", series)
        ingest.write_precip(tmp_path / "b.csv", series)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
