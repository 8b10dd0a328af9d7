import numpy as np
import pytest

from subseg_qe.corpus_io import (
    BAD, OK, BaselineSchema, DataError, QeSentence, array_to_tags, join_tags,
    load_baseline_features, load_qe_dataset, read_scores, split_tags, tags_to_array,
    write_predictions,
)


class TestTags:
    def test_interleaving(self):
        assert split_tags("OK BAD OK OK OK".split(), 2) == ((BAD, OK), (OK, OK, OK))

    def test_minimal_sentence(self):
        assert split_tags("OK OK OK".split(), 1) == ((OK,), (OK, OK))

    @pytest.mark.parametrize("line, n", [("OK BAD", 2), ("OK GOOD OK", 1), ("", 1)])
    def test_bad_counts_or_values(self, line, n):
        with pytest.raises(DataError):
            split_tags(line.split(), n)

    def test_join(self):
        assert join_tags([BAD, OK], [OK, BAD, OK]) == "OK BAD BAD OK OK".split()
        assert join_tags([OK, OK], [OK] * 3) == [OK] * 5

    def test_roundtrip(self):
        words, gaps = (BAD, OK, OK), (OK, OK, BAD, BAD)
        assert split_tags(join_tags(words, gaps), 3) == (words, gaps)

    def test_arrays(self):
        np.testing.assert_array_equal(tags_to_array([OK, BAD]), [0.0, 1.0])
        assert array_to_tags([1, 0]) == (BAD, OK)


def write(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


class TestDataset:
    def test_load(self, tmp_path):
        src = write(tmp_path / "s", ["a b", "c"])
        mt = write(tmp_path / "m", ["x y", "z"])
        tags = write(tmp_path / "t", ["OK BAD OK OK OK", "OK OK BAD"])
        hter = write(tmp_path / "h", ["0.5", "0.0"])
        data = load_qe_dataset(src, mt, tags, hter)
        assert data[0] == QeSentence(("a", "b"), ("x", "y"), (BAD, OK), (OK, OK, OK), 0.5)
        assert data[1].gold_gap_tags == (OK, BAD)

    def test_line_count_mismatch(self, tmp_path):
        src = write(tmp_path / "s", ["a", "b"])
        mt = write(tmp_path / "m", ["x"])
        with pytest.raises(DataError):
            load_qe_dataset(src, mt)

    def test_tag_error_names_line(self, tmp_path):
        src = write(tmp_path / "s", ["a", "b"])
        mt = write(tmp_path / "m", ["x", "y"])
        tags = write(tmp_path / "t", ["OK OK OK", "OK OK"])
        with pytest.raises(DataError, match=":2:"):
            load_qe_dataset(src, mt, tags)

    def test_bad_score(self, tmp_path):
        with pytest.raises(DataError):
            read_scores(write(tmp_path / "h", ["0.1", "n/a"]))

    def test_sentence_validation(self):
        with pytest.raises(DataError):
            QeSentence(("a",), ("x",), (OK, OK), (OK, OK))


def baseline_line(pos, values):
    cols = ["_"] * 28
    for c, v in zip(range(4, 18), values):
        cols[c] = str(v)
    cols[18] = pos
    return "\t".join(cols)


class TestBaseline:
    def file(self, tmp_path):
        lines = [baseline_line("N", range(14)), baseline_line("V", range(1, 15)), "",
                 baseline_line("X", [0.5] * 14), ""]
        return write(tmp_path / "b", lines)

    def test_pos_one_hot(self, tmp_path):
        schema = BaselineSchema(list(range(4, 18)), 18, pos_vocab=["N", "V", "ADJ"])
        table = load_baseline_features(self.file(tmp_path), schema, [2, 1])
        assert table.width == 17
        np.testing.assert_array_equal(table.rows[0][1, 14:], [0, 1, 0])
        np.testing.assert_array_equal(table.rows[0][0, :14], np.arange(14))
        # unseen tag: no POS bit set
        np.testing.assert_array_equal(table.rows[1][0, 14:], [0, 0, 0])

    def test_pos_disabled(self, tmp_path):
        schema = BaselineSchema(list(range(4, 18)), 18, use_pos=False)
        table = load_baseline_features(self.file(tmp_path), schema, [2, 1])
        assert table.width == 14 and table.rows[1].shape == (1, 14)

    def test_learned_vocab(self, tmp_path):
        schema = BaselineSchema(list(range(4, 18)), 18)
        table = load_baseline_features(self.file(tmp_path), schema)
        assert schema.pos_vocab == ["N", "V", "X"]
        assert table.width == 17
        assert BaselineSchema.from_dict(schema.to_dict()) == schema

    def test_no_file(self):
        table = load_baseline_features(None, None, [3, 1])
        assert table.width == 0 and table.rows[0].shape == (3, 0)

    def test_length_mismatch(self, tmp_path):
        schema = BaselineSchema(list(range(4, 18)), 18)
        with pytest.raises(DataError):
            load_baseline_features(self.file(tmp_path), schema, [1, 1])

    def test_wrong_column_count(self, tmp_path):
        path = write(tmp_path / "b", ["a\tb\tc"])
        with pytest.raises(DataError, match="columns"):
            load_baseline_features(path, BaselineSchema([0]), [1])

    def test_non_numeric(self, tmp_path):
        path = write(tmp_path / "b", [baseline_line("N", ["x"] * 14)])
        with pytest.raises(DataError, match="non-numeric"):
            load_baseline_features(path, BaselineSchema(list(range(4, 18))), [1])


class TestPredictions:
    def test_write_then_load(self, tmp_path):
        words = [(BAD, OK), (OK,)]
        gaps = [(OK, BAD, OK), (OK, OK)]
        paths = write_predictions(
            [2, 1], [[0.9, 0.1], [0.2]], [[0.1, 0.8, 0.0], [0.3, 0.4]], words, gaps,
            [0.5, 0.0], tmp_path)
        assert (tmp_path / "predicted.tags").read_text().splitlines()[0] == "OK BAD BAD OK OK"
        mt = write(tmp_path / "mt", ["x y", "z"])
        loaded = load_qe_dataset(mt, mt, paths["tags"], paths["scores"])
        assert [s.gold_word_tags for s in loaded] == words
        assert [s.gold_gap_tags for s in loaded] == gaps
        assert (tmp_path / "predicted.rank").read_text().split() == ["1", "0"]
        probs = (tmp_path / "predicted.probs").read_text().splitlines()[1].split("\t")
        assert probs == ["0.300000", "0.200000", "0.400000"]

    def test_all_ok(self, tmp_path):
        write_predictions([2], [[0, 0]], [[0, 0, 0]], [(OK, OK)], [(OK, OK, OK)], [0.0], tmp_path)
        assert (tmp_path / "predicted.tags").read_text() == "OK OK OK OK OK\n"

    def test_length_checks(self, tmp_path):
        with pytest.raises(DataError):
            write_predictions([2], [[0.1]], [[0, 0, 0]], [(OK,)], [(OK, OK, OK)], [0.0], tmp_path)
