import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dose.errors import (
    DuplicateSampleId,
    MissingManifest,
    NonFiniteValue,
    RoleMismatch,
    SchemaMismatch,
    TableTooSmall,
    UnknownModel,
    UnknownStatistic,
)
from dose.stat_tables import (
    StatSchema,
    StatTable,
    read_stat_table,
    select_columns,
    split_holdout,
    write_stat_table,
)


def make_table(values, stats=("nll",), models=(), role="train", ids=None):
    values = np.asarray(values, dtype=float)
    ids = ids or tuple(f"r{i}" for i in range(values.shape[0]))
    return StatTable(StatSchema(stats, models), role, ids, values)


class TestSchema:
    def test_reserved_separator_rejected(self):
        with pytest.raises(SchemaMismatch):
            StatSchema(("a@b",))

    def test_duplicate_names_rejected(self):
        with pytest.raises(SchemaMismatch):
            StatSchema(("a", "a"))

    def test_ensemble_column_names(self):
        schema = StatSchema(("nll", "rate"), ("m0", "m1"))
        assert schema.column_names == ("nll@m0", "nll@m1", "rate@m0", "rate@m1")

    def test_domain_meta_validation(self):
        meta = {"height": 28, "width": 28, "channels": 1, "levels": 256}
        assert StatSchema(("a",), domain_meta=meta).domain_meta == meta
        with pytest.raises(SchemaMismatch):
            StatSchema(("a",), domain_meta={"height": 28})
        with pytest.raises(SchemaMismatch):
            StatSchema(("a",), domain_meta={**meta, "levels": 1})


class TestTableValidation:
    def test_nan_rejected(self):
        with pytest.raises(NonFiniteValue):
            make_table([[np.nan]])

    def test_duplicate_sample_ids_rejected(self):
        with pytest.raises(DuplicateSampleId):
            make_table([[1.0], [2.0]], ids=("a", "a"))

    def test_column_lookup(self):
        t = make_table([[1.0, 2.0]], stats=("a", "b"))
        assert t.column("b")[0] == 2.0
        with pytest.raises(UnknownStatistic):
            t.column("c")


class TestRoundTrip:
    def test_minimal_ensemble_file(self, tmp_path):
        t = make_table([[1.5], [2.5]], stats=("nll",), models=("m0",))
        path = write_stat_table(t, tmp_path / "t.csv")
        back = read_stat_table(path)
        assert back.column_names == ("nll@m0",)
        assert back.n == 2
        assert np.array_equal(back.values, t.values)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.floats(allow_nan=False, allow_infinity=False, width=64),
            min_size=1,
            max_size=8,
        )
    )
    def test_values_roundtrip_bit_exact(self, tmp_path_factory, values):
        t = make_table(np.array(values)[:, None])
        path = write_stat_table(t, tmp_path_factory.mktemp("rt") / "t.csv")
        back = read_stat_table(path)
        assert back.values.tobytes() == t.values.tobytes()
        assert back.sample_ids == t.sample_ids
        assert back.schema == t.schema

    def test_missing_manifest(self, tmp_path):
        t = make_table([[1.0]])
        path = write_stat_table(t, tmp_path / "t.csv")
        (tmp_path / "t.csv.manifest.json").unlink()
        with pytest.raises(MissingManifest):
            read_stat_table(path)

    def test_nan_token_in_csv(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("sample_id,nll\nr0,NaN\n")
        (tmp_path / "t.csv.manifest.json").write_text(
            json.dumps({"role": "train", "statistic_names": ["nll"], "model_ids": []})
        )
        with pytest.raises(NonFiniteValue):
            read_stat_table(path)

    def test_header_manifest_mismatch(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("sample_id,rate\nr0,1.0\n")
        (tmp_path / "t.csv.manifest.json").write_text(
            json.dumps({"role": "train", "statistic_names": ["xent"], "model_ids": []})
        )
        with pytest.raises(SchemaMismatch):
            read_stat_table(path)

    def test_role_mismatch(self, tmp_path):
        path = write_stat_table(make_table([[1.0]], role="test"), tmp_path / "t.csv")
        with pytest.raises(RoleMismatch):
            read_stat_table(path, expected_role="train")

    def test_duplicate_id_in_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("sample_id,nll\nr0,1.0\nr0,2.0\n")
        (tmp_path / "t.csv.manifest.json").write_text(
            json.dumps({"role": "train", "statistic_names": ["nll"], "model_ids": []})
        )
        with pytest.raises(DuplicateSampleId):
            read_stat_table(path)


class TestSplitHoldout:
    def test_sizes(self):
        t = make_table(np.arange(10.0)[:, None])
        train, val = split_holdout(t, 0.1, seed=0)
        assert val.n == 1 and train.n == 9
        assert train.role == "train" and val.role == "val"

    def test_too_small(self):
        t = make_table(np.arange(10.0)[:, None])
        with pytest.raises(TableTooSmall):
            split_holdout(t, 0.95, seed=0)

    def test_determinism(self):
        t = make_table(np.arange(20.0)[:, None])
        a = split_holdout(t, 0.25, seed=9)
        b = split_holdout(t, 0.25, seed=9)
        assert a[0].sample_ids == b[0].sample_ids
        assert a[1].sample_ids == b[1].sample_ids

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(min_value=2, max_value=40),
        frac=st.floats(min_value=0.05, max_value=0.9),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_partition_property(self, n, frac, seed):
        import math

        k = math.ceil(frac * n - 1e-9)
        t = make_table(np.arange(float(n))[:, None])
        if k < 1 or k >= n:
            with pytest.raises(TableTooSmall):
                split_holdout(t, frac, seed)
            return
        train, val = split_holdout(t, frac, seed)
        assert val.n == k
        assert sorted(train.sample_ids + val.sample_ids) == sorted(t.sample_ids)
        assert not set(train.sample_ids) & set(val.sample_ids)


class TestSelectColumns:
    def setup_method(self):
        self.t = StatTable(
            StatSchema(("nll",), ("m0", "m1")),
            "train",
            ("r0",),
            np.array([[2.0, 4.0]]),
        )

    def test_ensemble_mean(self):
        out = select_columns(self.t, ("nll",), "ensemble_mean")
        assert out.column_names == ("nll",)
        assert out.column("nll")[0] == 3.0

    def test_single_model(self):
        out = select_columns(self.t, ("nll",), "single_model", "m1")
        assert out.column("nll")[0] == 4.0

    def test_unknown_statistic(self):
        with pytest.raises(UnknownStatistic):
            select_columns(self.t, ("iwae",))

    def test_unknown_model(self):
        with pytest.raises(UnknownModel):
            select_columns(self.t, ("nll",), "single_model", "m7")

    def test_mean_commutes_with_row_permutation(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=(6, 4))
        t = StatTable(
            StatSchema(("a", "b"), ("m0", "m1")),
            "train",
            tuple(f"r{i}" for i in range(6)),
            values,
        )
        perm = rng.permutation(6)
        permuted = StatTable(
            t.schema, t.role, tuple(t.sample_ids[i] for i in perm), t.values[perm]
        )
        direct = select_columns(t, ("a", "b"))
        swapped = select_columns(permuted, ("a", "b"))
        for sid in t.sample_ids:
            i = direct.sample_ids.index(sid)
            j = swapped.sample_ids.index(sid)
            assert np.array_equal(direct.values[i], swapped.values[j])

    def test_plain_table_mean_is_identity(self):
        t = make_table([[1.0, 5.0]], stats=("a", "b"))
        out = select_columns(t, ("b",))
        assert out.column("b")[0] == 5.0
