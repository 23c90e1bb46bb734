"""
Tests for parsing, loading, auditing and encoding
"""

import json

import numpy as np
import pytest

from dataset.audit import audit
from dataset.encoding import EncodingConfig, FeatureEncoder, encode
from dataset.loader import format_record, load_dataset, parse_record, write_dataset
from dataset.schema import MISSING, AttributeKind, AttributeSchema, Dataset, Record, Severity
from utils.errors import DataParseError, MissingValueError, ModelFormatError, SchemaError

from conftest import make_record


class TestParseRecord:

    def test_complete_line(self):
        record = parse_record("5,67,3,5,3,1")
        assert record.values == (5, 67.0, 3, 5, 3)
        assert record.label == Severity.MALIGNANT
        assert not record.coerced

    def test_question_mark_is_missing(self):
        record = parse_record("4,43,1,1,?,1")
        assert record.values[4] is MISSING
        assert record.has_missing()
        assert record.coerced == ()

    def test_out_of_domain_birads_is_coerced(self):
        record = parse_record("55,46,4,3,3,1")
        assert record.values[0] is MISSING
        assert record.coerced == (0,)
        assert record.values[1:] == (46.0, 4, 3, 3)

    def test_extra_field_reports_line(self):
        with pytest.raises(DataParseError) as info:
            parse_record("4,28,1,1,3,0,extra", line_number=7)
        assert info.value.line_number == 7
        assert "line 7" in str(info.value)

    def test_non_numeric_token(self):
        with pytest.raises(DataParseError, match="non-numeric"):
            parse_record("4,abc,1,1,3,0")

    @pytest.mark.parametrize("line", ["4,28,1,1,3,?", "4,28,1,1,3,", "4,28,1,1,3,2"])
    def test_bad_label(self, line):
        with pytest.raises(DataParseError):
            parse_record(line)

    def test_format_inverts_parse(self):
        for line in ("5,67,3,5,3,1", "4,43,1,1,?,1", "4,40,1,?,?,0"):
            assert format_record(parse_record(line)) == line


class TestLoadDataset:

    def test_record_count_and_order(self, uci_file):
        ds = load_dataset(uci_file)
        assert len(ds) == 20
        assert ds.records[0].values[1] == 67.0
        assert ds.records[-1].values[1] == 40.0

    def test_class_counts(self, uci_file):
        counts = load_dataset(uci_file).class_counts()
        assert counts == {Severity.BENIGN: 10, Severity.MALIGNANT: 10}

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "gaps.data"
        path.write_text("5,67,3,5,3,1\n\n4,28,1,1,3,0\n\n", encoding="utf-8")
        assert len(load_dataset(path)) == 2

    def test_first_bad_line_aborts(self, tmp_path):
        path = tmp_path / "bad.data"
        path.write_text("5,67,3,5,3,1\n4,28,1,1,3\n4,28,1,x,3,0\n", encoding="utf-8")
        with pytest.raises(DataParseError) as info:
            load_dataset(path)
        assert info.value.line_number == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path / "absent.data")

    def test_empty_file_warns(self, tmp_path, caplog):
        path = tmp_path / "empty.data"
        path.write_text("", encoding="utf-8")
        ds = load_dataset(path)
        assert len(ds) == 0
        report = audit(ds)
        assert report.record_count == 0
        assert any("empty" in message for message in caplog.messages)

    def test_write_then_load_keeps_records(self, uci_file, tmp_path):
        ds = load_dataset(uci_file)
        copy = load_dataset(write_dataset(ds, tmp_path / "copy.data"))
        assert copy.records == ds.records


class TestSchema:

    def test_record_arity_checked(self, schema):
        with pytest.raises(SchemaError, match="cells"):
            Dataset(schema, (make_record([4, 50.0, 1, 1], 0),))

    def test_out_of_domain_value_rejected(self, schema):
        with pytest.raises(SchemaError, match="domain"):
            Dataset(schema, (make_record([4, 50.0, 9, 1, 3], 0),))

    def test_ordinal_codes_must_increase(self):
        with pytest.raises(SchemaError):
            AttributeSchema("density", AttributeKind.ORDINAL, categories=(3, 1, 2))

    def test_continuous_range_order(self):
        with pytest.raises(SchemaError):
            AttributeSchema("age", AttributeKind.CONTINUOUS, value_range=(10.0, 1.0))

    def test_unknown_attribute(self, complete_dataset):
        with pytest.raises(SchemaError, match="unknown attribute"):
            complete_dataset.attribute_index("size")

    def test_missing_marker_is_singleton(self):
        assert parse_record("4,43,1,1,?,1").values[4] is MISSING
        assert repr(MISSING) == "MISSING"


class TestAudit:

    def test_missing_counts(self, uci_file):
        report = audit(load_dataset(uci_file))
        assert report.missing_counts() == {"bi_rads": 0, "age": 0, "shape": 2, "margin": 5, "density": 3}
        assert report.total_missing == 10
        assert report.complete_records == 12

    def test_blank_and_out_of_domain_kept_apart(self, tmp_path):
        path = tmp_path / "odd.data"
        path.write_text("55,46,4,3,3,1\n?,40,1,1,3,0\n6,60,4,5,3,1\n", encoding="utf-8")
        report = audit(load_dataset(path))
        birads = report.attributes[0]
        assert birads.missing == 3
        assert birads.blank == 1
        assert birads.out_of_domain == 2

    def test_histograms_and_statistics(self, uci_file):
        report = audit(load_dataset(uci_file))
        shape = next(a for a in report.attributes if a.name == "shape")
        assert sum(shape.frequencies.values()) == shape.valid == 18
        age = next(a for a in report.attributes if a.name == "age")
        assert age.minimum == 28.0
        assert age.maximum == 76.0
        assert report.class_counts == {"benign": 10, "malignant": 10}

    def test_json_and_text(self, uci_file, tmp_path):
        report = audit(load_dataset(uci_file))
        payload = json.loads(report.write_json(tmp_path / "audit.json").read_text(encoding="utf-8"))
        assert payload["total_missing"] == 10
        assert [a["name"] for a in payload["attributes"]] == ["bi_rads", "age", "shape", "margin", "density"]
        text = report.render_text()
        assert "Records: 20" in text
        assert "Total missing cells: 10" in text


class TestEncoding:

    def test_default_width(self, complete_dataset):
        fm = encode(complete_dataset)
        assert fm.width == 11
        assert fm.rows.shape == (120, 11)
        assert set(fm.onehot_groups()) == {"shape", "margin"}

    def test_birads_adds_a_column(self, complete_dataset):
        fm = encode(complete_dataset, EncodingConfig(include_non_predictive=True))
        assert fm.width == 12
        assert fm.columns[0].attribute == "bi_rads"

    def test_values_in_unit_range_on_fitted_data(self, complete_dataset):
        fm = encode(complete_dataset)
        assert fm.rows.min() >= 0.0
        assert fm.rows.max() <= 1.0
        groups = fm.onehot_groups()
        for columns in groups.values():
            assert np.all(fm.rows[:, columns].sum(axis=1) == 1.0)

    def test_ordinal_scaling(self, schema):
        ds = Dataset(schema, (make_record([4, 30.0, 1, 1, 1], 0), make_record([4, 70.0, 4, 5, 4], 1)))
        fm = encode(ds)
        density = [i for i, c in enumerate(fm.columns) if c.attribute == "density"][0]
        age = [i for i, c in enumerate(fm.columns) if c.attribute == "age"][0]
        assert fm.rows[:, density].tolist() == [0.0, 1.0]
        assert fm.rows[:, age].tolist() == [0.0, 1.0]

    def test_test_side_not_clipped(self, schema):
        train = Dataset(schema, (make_record([4, 40.0, 1, 1, 1], 0), make_record([4, 60.0, 4, 5, 4], 1)))
        test = Dataset(schema, (make_record([4, 80.0, 1, 1, 1], 0),))
        encoder = FeatureEncoder().fit(train)
        age = [i for i, c in enumerate(encoder.columns) if c.attribute == "age"][0]
        assert encoder.transform(test).rows[0, age] == pytest.approx(2.0)

    def test_missing_cell_rejected(self, incomplete_dataset):
        with pytest.raises(MissingValueError):
            encode(incomplete_dataset)

    def test_serialized_encoder_matches(self, complete_dataset):
        encoder = FeatureEncoder().fit(complete_dataset)
        restored = FeatureEncoder.from_dict(json.loads(json.dumps(encoder.to_dict())))
        assert np.array_equal(restored.transform(complete_dataset).rows, encoder.transform(complete_dataset).rows)

    def test_schema_mismatch(self, complete_dataset):
        encoder = FeatureEncoder().fit(complete_dataset)
        other_schema = tuple(a for a in complete_dataset.schema if a.name != "bi_rads")
        other = Dataset(other_schema, tuple(
            Record(values=r.values[1:], label=r.label) for r in complete_dataset.records[:3]
        ))
        with pytest.raises(ModelFormatError):
            encoder.transform(other)


class TestUciFile:

    def test_counts(self, uci_path):
        ds = load_dataset(uci_path)
        assert len(ds) == 961
        assert ds.class_counts() == {Severity.BENIGN: 516, Severity.MALIGNANT: 445}

    def test_blank_markers_match_published_counts(self, uci_path):
        report = audit(load_dataset(uci_path))
        assert report.blank_counts() == {"bi_rads": 2, "age": 5, "shape": 31, "margin": 48, "density": 76}
        assert report.total_blank == 162
