import math
import os

import numpy as np
import pytest

from eulervar.distributions import LogNormal
from eulervar.experiments import (CSV_HEADER, ExperimentConfig, ReplicateRecord, ResultRow, _mix64, derive_seed,
                                  make_rng, precompute_var, read_csv, run_grid, write_csv)
from eulervar.estimators import gaussian_closed_form
from eulervar.models import IndependentModel

from conftest import DESK_L


class TestSeeds:
    def test_deterministic(self):
        assert derive_seed(7, 1, 2, 3, 4) == derive_seed(7, 1, 2, 3, 4)

    def test_frozen_value(self):
        # guards cross-platform stability of the stream layout
        assert _mix64(0) == 0xE220A8397B1DCDAF
        assert derive_seed(0, 0, 0, 0, 0) == _mix64(_mix64(0))

    def test_no_replicate_collisions(self):
        seeds = {derive_seed(12345, 1, 2, 0, r) for r in range(2**16)}
        assert len(seeds) == 2**16

    def test_grid_indices_distinct(self):
        seeds = {derive_seed(1, a, d, n, r, s) for a in range(3) for d in range(4) for n in range(5)
                 for r in range(20) for s in range(2)}
        assert len(seeds) == 3 * 4 * 5 * 20 * 2

    def test_stream_uniform_sanity(self):
        for r in range(5):
            u = make_rng(derive_seed(99, 0, 0, 0, r)).random(10_000)
            assert abs(u.mean() - 0.5) < 0.02
            assert abs(u.var() - 1 / 12) < 0.005

    @pytest.mark.parametrize("args", [(0, 256, 0, 0, 0), (0, 0, 0, 0, 2**36), (0, 0, 0, 0, 0, 16), (0, -1, 0, 0, 0)])
    def test_out_of_range(self, args):
        with pytest.raises(ValueError):
            derive_seed(*args)


class TestConfig:
    def test_defaults(self, gaussian_model):
        c = ExperimentConfig(gaussian_model)
        assert c.alphas == [0.5, 0.9, 0.99] and c.deltas == [1e-3, 1e-4, 1e-5, 1e-6]
        assert c.sample_sizes == [10_000, 31_622, 100_000] and c.replicates == 200
        assert c.assets == [0, 1, 2]

    @pytest.mark.parametrize("kw", [dict(alphas=[1.0]), dict(deltas=[0.0]), dict(sample_sizes=[0]),
                                    dict(replicates=0), dict(assets=[3]), dict(alphas=[0.5], deltas=[0.6])])
    def test_invalid(self, gaussian_model, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(gaussian_model, **kw)

    def test_band_wider_than_tail_warns(self, gaussian_model):
        with pytest.warns(UserWarning, match="2 delta"):
            ExperimentConfig(gaussian_model, alphas=[0.99], deltas=[0.006])


def small(model, **kw):
    base = dict(alphas=[0.9], deltas=[1e-2], sample_sizes=[2000], replicates=6, base_seed=5, n_pre=20_000)
    base.update(kw)
    return ExperimentConfig(model, **base)


class TestRunGrid:
    def test_single_replicate_zero_variance(self, gaussian_model):
        rows = run_grid(small(gaussian_model, replicates=1))
        assert all(r.variance_over_replicates == 0.0 for r in rows)

    def test_row_layout(self, gaussian_model):
        rows = run_grid(small(gaussian_model, alphas=[0.9, 0.95], sample_sizes=[500, 1000]))
        assert len(rows) == 2 * 1 * 2 * 3 * 2
        assert {r.estimator_kind for r in rows} == {"delta", "malliavin"}
        assert all(r.variance_over_replicates >= 0 and r.undefined_count <= 6 for r in rows)

    def test_rerun_bitwise(self, lognormal_model):
        a = run_grid(small(lognormal_model))
        b = run_grid(small(lognormal_model))
        assert a == b

    def test_workers_do_not_change_rows(self, clayton_normal_model):
        a = run_grid(small(clayton_normal_model), workers=1)
        b = run_grid(small(clayton_normal_model), workers=3)
        assert a == b

    def test_shared_batch_per_replicate(self, gaussian_model):
        cfg = small(gaussian_model)
        records: list[ReplicateRecord] = []
        run_grid(cfg, records=records)
        assert len(records) == cfg.replicates
        for rec in records:
            batch = gaussian_model.sample(cfg.sample_sizes[rec.n_idx], make_rng(rec.seed))
            assert batch.checksum() == rec.checksum
            kinds = [e.kind for e in rec.estimates]
            assert kinds == ["delta", "malliavin"] * 3
            band = [e.tail_count for e in rec.estimates if e.kind == "delta"]
            assert set(band) == {rec.band_count}

    def test_undefined_counted_and_excluded(self, gaussian_model):
        # a tiny band at N=50 is usually empty
        rows = run_grid(small(gaussian_model, deltas=[1e-4], sample_sizes=[50], replicates=30))
        delta_rows = [r for r in rows if r.estimator_kind == "delta"]
        assert all(r.undefined_count > 0 for r in delta_rows)
        records = []
        run_grid(small(gaussian_model, deltas=[1e-4], sample_sizes=[50], replicates=30), records=records)
        vals = [r.estimates[0].value for r in records if r.estimates[0].defined]
        assert delta_rows[0].undefined_count == 30 - len(vals)
        if len(vals) >= 2:
            assert delta_rows[0].mean_over_replicates == pytest.approx(np.mean(vals), rel=1e-15)

    def test_assets_subset(self, gaussian_model):
        rows = run_grid(small(gaussian_model, assets=[2]))
        assert {r.asset for r in rows} == {2}

    def test_closed_form_var_for_gaussian(self, gaussian_model):
        lv = precompute_var(gaussian_model, [0.99], [1e-3], 10, 0)
        assert lv.var[0] == gaussian_closed_form(DESK_L, 0.99)[1]
        assert lv.source == "closed_form"

    def test_prerun_var_close_to_truth(self):
        m = IndependentModel([LogNormal(0, 1), LogNormal(0, 1)])
        lv = precompute_var(m, [0.5], [0.01], 200_000, 3)
        lo, hi = lv.band[(0, 0)]
        assert lo < lv.var[0] < hi

    def test_tail_count_ratios(self, gaussian_model):
        records = []
        cfg = small(gaussian_model, alphas=[0.95], deltas=[5e-3], sample_sizes=[10_000], replicates=60)
        run_grid(cfg, records=records)
        n = 10_000
        for attr, p in (("tail_count", 0.05), ("band_count", 0.01)):
            frac = np.array([getattr(r, attr) / n for r in records])
            se = frac.std(ddof=1) / math.sqrt(frac.size)
            assert abs(frac.mean() - p) < 3 * se

    def test_degenerate_warning(self):
        from eulervar.distributions import Exponential
        from eulervar.estimators import DegenerateWeightWarning
        m = IndependentModel([Exponential(1.0), Exponential(2.0)])
        with pytest.warns(DegenerateWeightWarning):
            run_grid(small(m, replicates=2))


class TestCsv:
    def test_header_and_precision(self, tmp_path):
        row = ResultRow("m", 0.99, 1e-5, 100, 0, "delta", 1 / 3, 2 / 3, 0, 1)
        path = tmp_path / "out.csv"
        write_csv([row], path)
        text = path.read_text()
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert lines[1] == "m,0.98999999999999999,1.0000000000000001e-05,100,0,delta,0.33333333333333331,0.66666666666666663,0,1"
        parsed = read_csv(path)[0]
        assert float(parsed["mean"]) == 1 / 3

    def test_nan_written(self, tmp_path):
        row = ResultRow("m", 0.5, 0.1, 10, 0, "delta", math.nan, math.nan, 3, 0)
        write_csv([row], tmp_path / "x.csv")
        assert "nan,nan,3,0" in (tmp_path / "x.csv").read_text()

    def test_atomic_on_failure(self, tmp_path):
        path = tmp_path / "keep.csv"
        path.write_text("previous\n")

        class Boom(ResultRow):
            def csv_fields(self):
                raise RuntimeError("boom")

        with pytest.raises(RuntimeError):
            write_csv([Boom("m", 0.5, 0.1, 10, 0, "delta", 0.0, 0.0, 0, 0)], path)
        assert path.read_text() == "previous\n"
        assert os.listdir(tmp_path) == ["keep.csv"]
