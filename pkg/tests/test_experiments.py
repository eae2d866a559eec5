import dataclasses
import hashlib
import json

import numpy as np
import pytest

from semgshift import dsp, experiments, learn
from semgshift.core import (
    CAPGMYO_GRID,
    Dataset,
    GridLayout,
    LabeledWindow,
    ParameterError,
    ProtocolError,
)
from semgshift.experiments import (
    ExperimentConfig,
    build_windows,
    config_from_json,
    config_to_json,
    run_condition,
    run_experiment1,
    run_experiment2,
    split_intrasession,
    write_report,
)
from semgshift.ingest import SyntheticSpec, generate_synthetic

SMALL_GRID = GridLayout(rows=4, cols=4, module_width=2, pitch_mm=8.0)


def small_spec(**overrides):
    kwargs = dict(
        layout=SMALL_GRID,
        G=3,
        reps=10,
        duration_s=0.5,
        spatial_sigma=1.0,
        snr_db=20.0,
        seed=0,
    )
    kwargs.update(overrides)
    return SyntheticSpec(**kwargs)


def small_config(experiment=1, **overrides):
    kwargs = dict(
        experiment=experiment,
        synthetic=small_spec(),
        feature_sets=("td",),
        central_s=0.3,
        window_ms=128.0,
        stride_ms=32.0,
        seed=0,
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


class TestConfig:
    def test_condition_defaults_per_experiment(self):
        c1 = small_config(experiment=1)
        assert c1.conditions == ("CS-CS", "AVS-AVS", "AVS-CS", "CS-AVS")
        c2 = small_config(experiment=2)
        assert c2.conditions == ("AVS", "CS", "AC")

    def test_condition_set_must_match_experiment(self):
        with pytest.raises(ParameterError):
            small_config(experiment=1, conditions=("AVS",))
        with pytest.raises(ParameterError):
            small_config(experiment=2, conditions=("CS-CS",))

    def test_exactly_one_data_source(self):
        with pytest.raises(ParameterError):
            ExperimentConfig(experiment=1)
        with pytest.raises(ParameterError):
            ExperimentConfig(
                experiment=1, dataset_root="/tmp/x", synthetic=small_spec()
            )

    def test_unknown_feature_set_rejected(self):
        with pytest.raises(ParameterError):
            small_config(feature_sets=("td", "mystery"))

    def test_json_round_trip(self):
        cfg = small_config(
            experiment=2,
            feature_sets=("td", "sampen"),
            conditions=("AVS", "CS"),
            pca_enabled=True,
            pca_threshold=0.9,
            seed=7,
            synthetic=small_spec(seed=7),
            session_direction="both",
            exclude_subjects=(10,),
            output_dir="/tmp/out",
        )
        doc = config_to_json(cfg)
        back = config_from_json(json.loads(json.dumps(doc)))
        assert back == cfg

    def test_json_file_round_trip(self, tmp_path):
        cfg = small_config()
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config_to_json(cfg)))
        assert config_from_json(path) == cfg

    def test_seed_key_reaches_synthetic_spec(self):
        doc = config_to_json(small_config())
        doc["seed"] = 3
        cfg = config_from_json(doc)
        assert cfg.seed == 3
        assert cfg.synthetic.seed == 3


class TestSplit:
    def test_odd_reps_train_even_test(self):
        recs = generate_synthetic(small_spec(), sessions=(1,))
        train, test = split_intrasession(recs)
        assert sorted({r.repetition for r in train}) == [1, 3, 5, 7, 9]
        assert sorted({r.repetition for r in test}) == [2, 4, 6, 8, 10]
        assert len(train) == len(test) == len(recs) / 2

    def test_missing_rep_reported(self):
        recs = generate_synthetic(small_spec(), sessions=(1,))
        broken = [r for r in recs if not (r.gesture == 2 and r.repetition == 7)]
        with pytest.raises(ProtocolError, match=r"gesture 2.*missing reps \[7\]"):
            split_intrasession(broken)

    def test_duplicate_rep_reported(self):
        recs = generate_synthetic(small_spec(), sessions=(1,))
        dup = recs + [r for r in recs if r.gesture == 1 and r.repetition == 4]
        with pytest.raises(ProtocolError, match="duplicated"):
            split_intrasession(dup)


class TestWindowCounts:
    def test_capgmyo_intrasession_counts(self):
        spec = SyntheticSpec()  # full-size default: 8 gestures, 10 reps, 1.2 s
        cfg = ExperimentConfig(
            experiment=1, synthetic=spec, feature_sets=("td",), conditions=("CS-CS",)
        )
        recs = generate_synthetic(spec, sessions=(1,))
        train_recs, test_recs = split_intrasession(recs)
        assert build_windows(train_recs, cfg).N == 1960
        assert build_windows(test_recs, cfg).N == 1960

    def test_capgmyo_intersession_counts(self):
        spec = SyntheticSpec()
        cfg = ExperimentConfig(
            experiment=2, synthetic=spec, feature_sets=("td",), conditions=("CS",)
        )
        recs = generate_synthetic(spec, sessions=(1, 2))
        for session in (1, 2):
            ds = build_windows([r for r in recs if r.session == session], cfg)
            assert ds.N == 3920

    def test_provenance_records_window_origin(self):
        cfg = small_config()
        recs = generate_synthetic(small_spec(), sessions=(1,))
        ds = build_windows(recs[:2], cfg)
        starts = sorted({w.provenance.start_sample for w in ds})
        # 0.5 s recording, 0.3 s central segment -> offset 100; stride 32
        assert starts[0] == 100
        assert starts[1] == 132
        assert all(w.provenance.subset_row is None for w in ds)


class TestRunCondition:
    def test_resubstitution_near_perfect(self):
        cfg = small_config(synthetic=small_spec(snr_db=30.0))
        recs = generate_synthetic(dataclasses.replace(cfg.synthetic, seed=0), sessions=(1,))
        train, _ = split_intrasession(recs)
        ds = build_windows(train, cfg)
        acc = run_condition(ds, ds, "CS-CS", "td", cfg, SMALL_GRID)
        assert acc >= 0.95

    def test_permuted_labels_fall_to_chance(self):
        # full-size data: the tiny grid is too correlated for a tight band
        spec = SyntheticSpec()
        cfg = ExperimentConfig(
            experiment=1, synthetic=spec, feature_sets=("td",), conditions=("CS-CS",)
        )
        recs = generate_synthetic(spec, sessions=(1,))
        train_recs, test_recs = split_intrasession(recs)
        train = build_windows(train_recs, cfg)
        test = build_windows(test_recs, cfg)
        rng = np.random.default_rng(0)
        shuffled = rng.permutation(train.labels())
        permuted = Dataset(
            [
                LabeledWindow(w.samples, int(g), w.provenance)
                for w, g in zip(train, shuffled)
            ],
            train.G,
        )
        acc = run_condition(permuted, test, "CS-CS", "td", cfg, CAPGMYO_GRID)
        # 3-sigma binomial band around 1/G = 0.125, with the 40 test
        # repetitions (not the correlated windows) as the effective n
        assert abs(acc - 0.125) < 0.15

    def test_single_row_grid_collapses_all_conditions(self):
        ribbon = GridLayout(rows=1, cols=8, module_width=2, pitch_mm=8.0)
        spec = small_spec(layout=ribbon, session_row_shift=0)
        cfg = small_config(synthetic=spec)
        recs = generate_synthetic(spec, sessions=(1,))
        train_recs, test_recs = split_intrasession(recs)
        train = build_windows(train_recs, cfg)
        test = build_windows(test_recs, cfg)
        accs = [
            run_condition(train, test, cond, "td", cfg, ribbon)
            for cond in ("CS-CS", "AVS-AVS", "AVS-CS", "CS-AVS")
        ]
        assert accs.count(accs[0]) == 4

    def test_leakage_audit(self, monkeypatch):
        """Nothing derived from test windows may reach any fitting routine."""
        cfg = small_config(pca_enabled=True)
        recs = generate_synthetic(small_spec(), sessions=(1,))
        train_recs, test_recs = split_intrasession(recs)
        train = build_windows(train_recs, cfg)
        test = build_windows(test_recs, cfg)

        test_reps = {r.repetition for r in test_recs}
        seen = {"stats": 0, "lda": 0, "pca": 0}

        real_stats = dsp.fit_channel_stats
        real_lda = learn.fit_lda
        real_pca = learn.fit_pca

        def audit_stats(data):
            for w in data:
                assert w.provenance.repetition not in test_reps
            seen["stats"] += 1
            return real_stats(data)

        train_sizes = []

        def audit_lda(x, y, lam=1e-6):
            seen["lda"] += 1
            train_sizes.append(x.shape[0])
            return real_lda(x, y, lam=lam)

        def audit_pca(x, threshold=0.95):
            seen["pca"] += 1
            train_sizes.append(x.shape[0])
            return real_pca(x, threshold)

        monkeypatch.setattr(dsp, "fit_channel_stats", audit_stats)
        monkeypatch.setattr(learn, "fit_lda", audit_lda)
        monkeypatch.setattr(learn, "fit_pca", audit_pca)

        for cond in ("CS-CS", "AVS-CS", "CS-AVS", "AVS-AVS"):
            run_condition(train, test, cond, "td", cfg, SMALL_GRID)

        assert seen == {"stats": 4, "lda": 4, "pca": 4}
        n, rows = train.N, SMALL_GRID.rows
        assert set(train_sizes) <= {n, n * rows}

    def test_empty_partition_rejected(self):
        cfg = small_config()
        recs = generate_synthetic(small_spec(), sessions=(1,))
        ds = build_windows(recs, cfg)
        empty = Dataset([], ds.G)
        with pytest.raises(ProtocolError):
            run_condition(ds, empty, "CS-CS", "td", cfg, SMALL_GRID)


class TestExperiment1:
    def test_full_grid_of_cells(self):
        cfg = small_config(feature_sets=("td", "etd"))
        report = run_experiment1(cfg)
        assert len(report.cells) == 2 * 4  # feature sets x conditions, one subject
        combos = {(c.feature_set, c.condition) for c in report.cells}
        assert len(combos) == 8
        for c in report.cells:
            assert 0.0 <= c.accuracy <= 1.0

    def test_statistics_rows_present(self):
        cfg = small_config(feature_sets=("td", "etd"), synthetic=small_spec(subjects=3))
        report = run_experiment1(cfg)
        names = [r.comparison for r in report.statistics]
        assert "feature_set_effect" in names
        assert "condition_variance" in names
        assert "CS-CS_vs_CS-AVS" in names
        method = {r.comparison: r.method for r in report.statistics}
        assert method["feature_set_effect"] == "ANOVA_F"
        assert method["condition_variance"] == "LEVENE"
        assert method["CS-CS_vs_AVS-CS"] == "WILCOXON_SR"

    def test_aggregate_mean_matches_cells(self):
        cfg = small_config(synthetic=small_spec(subjects=2))
        report = run_experiment1(cfg)
        for fs, cond, pca, n, mean, _ in report.aggregates():
            vals = [
                c.accuracy
                for c in report.cells
                if (c.feature_set, c.condition, c.pca) == (fs, cond, pca)
            ]
            assert n == 2
            assert abs(mean - np.mean(vals)) < 1e-12


class TestExperiment2:
    def test_direction_modes(self):
        base = dict(
            synthetic=small_spec(reps=2, subjects=2),
            feature_sets=("td",),
            conditions=("CS",),
        )
        fwd = run_experiment2(small_config(experiment=2, session_direction="1to2", **base))
        rev = run_experiment2(small_config(experiment=2, session_direction="2to1", **base))
        both = run_experiment2(small_config(experiment=2, session_direction="both", **base))
        f = {c.subject: c.accuracy for c in fwd.cells}
        r = {c.subject: c.accuracy for c in rev.cells}
        b = {c.subject: c.accuracy for c in both.cells}
        for s in f:
            assert b[s] == pytest.approx((f[s] + r[s]) / 2.0, abs=1e-12)

    def test_pca_enabled_doubles_cells(self):
        cfg = small_config(
            experiment=2,
            synthetic=small_spec(reps=2),
            conditions=("AVS", "CS"),
            pca_enabled=True,
        )
        report = run_experiment2(cfg)
        assert {c.pca for c in report.cells} == {False, True}
        assert len(report.cells) == 4  # 1 subject x 1 fs x 2 conditions x 2 pca
        names = [r.comparison for r in report.statistics]
        assert "AVS_vs_CS_td" in names
        assert "AVS_vs_CS_td_pca" in names

    def test_missing_session_is_protocol_error(self):
        cfg = small_config(experiment=2, synthetic=small_spec(reps=2))

        real = generate_synthetic

        def drop_session2(spec, sessions=(1, 2)):
            return [r for r in real(spec, sessions) if r.session == 1]

        import semgshift.experiments as exp_mod

        orig = exp_mod.ingest.generate_synthetic
        exp_mod.ingest.generate_synthetic = drop_session2
        try:
            with pytest.raises(ProtocolError, match="session 2"):
                run_experiment2(cfg)
        finally:
            exp_mod.ingest.generate_synthetic = orig

    def test_exclude_subjects(self):
        cfg = small_config(
            experiment=2,
            synthetic=small_spec(reps=2, subjects=3),
            conditions=("CS",),
            exclude_subjects=(2,),
        )
        report = run_experiment2(cfg)
        assert sorted({c.subject for c in report.cells}) == [1, 3]

    def test_insufficient_subjects_flagged(self):
        cfg = small_config(
            experiment=2, synthetic=small_spec(reps=2), conditions=("AVS", "CS")
        )
        report = run_experiment2(cfg)
        rows = [r for r in report.statistics if r.comparison == "AVS_vs_CS_td"]
        assert rows and rows[0].flag == "insufficient-n"


class TestReports:
    def test_byte_identical_reruns(self, tmp_path):
        cfg = small_config(synthetic=small_spec(subjects=2), output_dir=None)
        digests = []
        for sub in ("a", "b"):
            report = run_experiment1(cfg)
            paths = write_report(report, tmp_path / sub)
            blob = b"".join(open(p, "rb").read() for p in sorted(paths))
            digests.append(hashlib.sha256(blob).hexdigest())
        assert digests[0] == digests[1]

    def test_seed_changes_report(self, tmp_path):
        r0 = run_experiment1(small_config(seed=0, synthetic=small_spec(seed=0)))
        r1 = run_experiment1(small_config(seed=1, synthetic=small_spec(seed=1)))
        a0 = [c.accuracy for c in r0.cells]
        a1 = [c.accuracy for c in r1.cells]
        assert a0 != a1

    def test_report_files_and_headers(self, tmp_path):
        cfg = small_config()
        report = run_experiment1(cfg)
        write_report(report, tmp_path)
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["aggregate.csv", "report.csv", "report.md", "statistics.csv"]
        assert (tmp_path / "report.csv").read_text().splitlines()[0] == (
            "subject,feature_set,condition,pca,accuracy"
        )
        assert (tmp_path / "aggregate.csv").read_text().splitlines()[0] == (
            "feature_set,condition,pca,n_subjects,mean_accuracy,std_accuracy"
        )
        assert (tmp_path / "statistics.csv").read_text().splitlines()[0] == (
            "comparison,method,statistic,df1,df2,p_value,flag"
        )
        md = (tmp_path / "report.md").read_text()
        assert "semgshift-" in md
        assert "```json" in md

    def test_config_echo_embedded(self):
        cfg = small_config()
        report = run_experiment1(cfg)
        assert report.config_echo == config_to_json(cfg)
