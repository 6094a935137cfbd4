import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riskcal import (
    CandidateSet,
    DataError,
    canonical_json,
    dump_loss_table,
    emit_report,
    histogram_csv,
    load_loss_table,
    parse_loss_csv,
    render_report,
    selection_csv,
    summary_doc,
    validation_csv,
    write_text,
)

from conftest import make_table


class TestCanonicalJson:
    def test_sorted_keys_compact(self):
        assert canonical_json({"b": 1, "a": [True, None]}) == '{"a":[true,null],"b":1}'

    def test_float_formatting(self):
        assert canonical_json(0.1) == "0.1"
        assert canonical_json(1 / 3) == "0.333333333"
        assert canonical_json(2.0) == "2"

    def test_numpy_scalars_and_arrays(self):
        doc = {"x": np.float64(0.25), "v": np.array([1.0, 2.0]), "n": np.int64(3)}
        assert canonical_json(doc) == '{"n":3,"v":[1,2],"x":0.25}'

    def test_non_finite_rejected(self):
        with pytest.raises(DataError, match="non-finite"):
            canonical_json({"x": float("nan")})

    def test_non_string_keys_rejected(self):
        with pytest.raises(DataError, match="string keys"):
            canonical_json({1: "x"})

    def test_unserializable_type(self):
        with pytest.raises(DataError, match="cannot serialize"):
            canonical_json({"x": object()})

    def test_deterministic(self):
        doc = {"z": [0.1, 0.2], "a": {"nested": 7}, "m": "text"}
        assert canonical_json(doc) == canonical_json(dict(reversed(doc.items())))


class TestLossCsv:
    def small(self):
        cands = CandidateSet(["p", "q"])
        table = make_table(np.array([
            [[0.1, 0.9], [0.2, 0.8]],
            [[0.3, 0.7], [0.4, 0.6]],
        ]))
        return cands, table

    def test_roundtrip_exact(self):
        cands, table = self.small()
        text = dump_loss_table(cands, table)
        cands2, table2 = parse_loss_csv(text)
        assert cands2.ids == cands.ids
        np.testing.assert_array_equal(table2.values, table.values)

    def test_awkward_floats_roundtrip(self):
        vals = np.array([[[1 / 3, 0.1 + 0.2]], [[5e-324, 1.0]]])
        # 0.1 + 0.2 = 0.30000000000000004 must survive the trip bit-for-bit
        table = make_table(vals)
        _, table2 = parse_loss_csv(dump_loss_table(CandidateSet(["only"]), table))
        np.testing.assert_array_equal(table2.values, table.values)

    def test_header_enforced(self):
        with pytest.raises(DataError, match="line 1: header"):
            parse_loss_csv("sample,candidate,objective,loss\ns0,c,0,0.5\n")
        with pytest.raises(DataError, match="line 1"):
            parse_loss_csv("")

    def test_row_errors_carry_line_numbers(self):
        head = "sample_id,candidate_id,objective,loss\n"
        with pytest.raises(DataError, match="line 2: expected 4 fields"):
            parse_loss_csv(head + "s0,c0,0\n")
        with pytest.raises(DataError, match="line 3: loss outside"):
            parse_loss_csv(head + "s0,c0,0,0.5\ns1,c0,0,1.5\n")
        with pytest.raises(DataError, match="line 2: objective must be an integer"):
            parse_loss_csv(head + "s0,c0,zero,0.5\n")
        with pytest.raises(DataError, match="line 3: duplicate cell"):
            parse_loss_csv(head + "s0,c0,0,0.5\ns0,c0,0,0.6\n")

    def test_missing_cell_named(self):
        head = "sample_id,candidate_id,objective,loss\n"
        body = "s0,c0,0,0.5\ns0,c1,0,0.5\ns1,c0,0,0.5\n"
        with pytest.raises(DataError, match="missing cell: sample 's1', candidate 'c1'"):
            parse_loss_csv(head + body)

    def test_first_appearance_order(self):
        head = "sample_id,candidate_id,objective,loss\n"
        rows = ["s1,zed,0,0.1", "s1,abc,0,0.2", "s0,zed,0,0.3", "s0,abc,0,0.4"]
        cands, table = parse_loss_csv(head + "\n".join(rows) + "\n")
        assert cands.ids == ("zed", "abc")  # not sorted: order of appearance
        assert table.values[0, 0, 0] == 0.1  # s1 came first

    def test_no_rows(self):
        with pytest.raises(DataError, match="no data rows"):
            parse_loss_csv("sample_id,candidate_id,objective,loss\n")

    def test_dump_validates_lengths(self):
        cands, table = self.small()
        with pytest.raises(DataError, match="sample identifiers"):
            dump_loss_table(cands, table, sample_ids=["only_one"])
        with pytest.raises(DataError, match="candidates"):
            dump_loss_table(CandidateSet(["p"]), table)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            load_loss_table(str(tmp_path / "nope.csv"))

    def test_load_roundtrip(self, tmp_path):
        cands, table = self.small()
        path = tmp_path / "t.csv"
        path.write_text(dump_loss_table(cands, table))
        cands2, table2 = load_loss_table(str(path))
        np.testing.assert_array_equal(table2.values, table.values)

    @given(st.data())
    @settings(max_examples=25)
    def test_shuffled_rows_roundtrip(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        n, m, L = (data.draw(st.integers(1, 4)) for _ in range(3))
        table = make_table(rng.integers(0, 5, size=(n, m, L)) / 4.0)
        cands = CandidateSet([f"c{j}" for j in range(m)])
        lines = dump_loss_table(cands, table).splitlines()
        body = lines[1:]
        rng.shuffle(body)
        cands2, table2 = parse_loss_csv("\n".join([lines[0]] + body) + "\n")
        perm_c = [cands2.ids.index(c) for c in cands.ids]
        # realign candidate order before comparing (samples likewise)
        got = table2.values[:, perm_c, :]
        want_rows = {f"s{i}": table.values[i] for i in range(n)}
        seen = [r.split(",")[0] for r in body]
        order = list(dict.fromkeys(seen))
        np.testing.assert_array_equal(got, np.stack([want_rows[s] for s in order]))


class TestReports:
    def test_histogram_shape_and_mass(self):
        cands = CandidateSet(["a", "b"])
        table = make_table(np.random.default_rng(3).random((100, 2, 2)))
        text = histogram_csv(cands, table, bins=10)
        lines = text.splitlines()
        assert lines[0] == "candidate_id,objective,bin_lo,bin_hi,count"
        assert len(lines) == 1 + 2 * 2 * 10
        counts = [int(l.split(",")[4]) for l in lines[1:]]
        assert sum(counts) == 100 * 2 * 2

    def test_histogram_bins_validated(self):
        cands = CandidateSet(["a"])
        with pytest.raises(DataError, match="bins"):
            histogram_csv(cands, make_table([[0.5]]), bins=0)

    def test_summary_doc(self):
        cands = CandidateSet(["a"])
        table = make_table(np.linspace(0, 1, 10)[:, None, None])
        doc = summary_doc(cands, table)
        assert doc["n_samples"] == 10
        entry = doc["candidates"]["a"][0]
        assert set(entry) == {"mean", "q_0.5", "q_0.9"}
        assert entry["mean"] == pytest.approx(0.5)

    def test_selection_csv(self):
        doc = {"procedure": "bonferroni", "selected": ["a"],
               "evidence": {"b": 0.5, "a": 0.001}}
        assert selection_csv(doc) == (
            "candidate_id,evidence,selected\na,0.001,true\nb,0.5,false\n"
        )

    def test_validation_csv(self):
        doc = {"method": "ltt", "guarantee": "FWER", "delta": 0.1, "trials": 200,
               "error_rate": 0.05, "wilson_low": 0.02, "wilson_high": 0.09,
               "power": 0.9, "n_candidates": 3, "n_reliable": 1,
               "selection_sizes": [1, 1, 2]}
        text = validation_csv(doc)
        assert text.startswith("key,value\nmethod,ltt\n")
        assert "mean_selection_size,1.33333333" in text
        assert "delta,0.1\n" in text

    def test_render_dispatch(self):
        sel = {"procedure": "x", "selected": [], "evidence": {}}
        val = {"trials": 10, "method": "ltt"}
        assert render_report(sel, "json") == canonical_json(sel) + "\n"
        assert render_report(sel, "csv-summary").startswith("candidate_id,")
        assert render_report(val, "csv-summary").startswith("key,value")
        with pytest.raises(DataError, match="unknown report format"):
            render_report(sel, "yaml")
        with pytest.raises(DataError, match="no CSV summary"):
            render_report({"neither": 1}, "csv-summary")

    def test_emit_report_bytes_stable(self, tmp_path):
        doc = {"b": 0.5, "a": [1, 2, 3]}
        p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
        emit_report(doc, str(p1))
        emit_report(dict(reversed(doc.items())), str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_write_text_failure(self, tmp_path):
        with pytest.raises(DataError, match="cannot write"):
            write_text(str(tmp_path / "no_dir" / "f.txt"), "x")
