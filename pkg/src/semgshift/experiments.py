"""Benchmark harness for electrode-shift robustness studies.

Two protocols are implemented:

* Experiment 1 (intrasession): odd repetitions train, even repetitions test,
  with train/test channel treatments crossed as named conditions such as
  ``CS-CS`` or ``AVS-CS``.
* Experiment 2 (intersession): one session trains, the other tests, with a
  single treatment token per condition (``AVS``, ``CS``, ``AC``) that expands
  to a fixed train/test treatment pair.

Channel treatments:

* ``CS``  - keep only the central-row subset.
* ``AVS`` - replicate every window once per row subset (training-time
  augmentation); as a test treatment it reduces to the central subset.
* ``AC``  - keep all channels.

Everything downstream of the raw recordings is deterministic, so a config
with a fixed seed reproduces its reports byte for byte.
"""

from __future__ import annotations

import dataclasses
import io
import json
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import dsp, features, ingest, learn, stats, subsets
from .core import (
    Dataset,
    GridLayout,
    LabeledWindow,
    ParameterError,
    ProtocolError,
    Provenance,
    Recording,
)

EXPERIMENT1_CONDITIONS = ("CS-CS", "AVS-AVS", "AVS-CS", "CS-AVS")
EXPERIMENT2_CONDITIONS = ("AVS", "CS", "AC")

_TREATMENTS = ("CS", "AVS", "AC")

# test-side treatment implied by each intersession training treatment
_EXPERIMENT2_PAIRS = {"AVS": ("AVS", "CS"), "CS": ("CS", "CS"), "AC": ("AC", "AC")}

_REPS_PER_GESTURE = 10
_TRAIN_REPS = (1, 3, 5, 7, 9)
_TEST_REPS = (2, 4, 6, 8, 10)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one benchmark run."""

    experiment: int
    dataset_root: Optional[str] = None
    synthetic: Optional[ingest.SyntheticSpec] = None
    feature_sets: tuple = ("td", "etd", "ninapro", "sampen")
    conditions: tuple = ()
    pca_enabled: bool = False
    pca_threshold: float = 0.95
    window_ms: float = 256.0
    stride_ms: float = 15.0
    central_s: float = 1.0
    filter_low_hz: float = 45.0
    filter_high_hz: float = 55.0
    filter_order: int = 2
    tau: float = 0.01
    lda_lambda: float = 1e-6
    seed: int = 0
    session_direction: str = "1to2"
    column_offset: int = 0
    exclude_subjects: tuple = ()
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in (1, 2):
            raise ParameterError(f"experiment must be 1 or 2, got {self.experiment}")
        if (self.dataset_root is None) == (self.synthetic is None):
            raise ParameterError("exactly one of dataset_root and synthetic is required")
        if not self.feature_sets:
            raise ParameterError("feature_sets must not be empty")
        for name in self.feature_sets:
            if name not in features.FEATURE_SETS:
                raise ParameterError(f"unknown feature set {name!r}")
        valid = EXPERIMENT1_CONDITIONS if self.experiment == 1 else EXPERIMENT2_CONDITIONS
        conds = self.conditions or valid
        object.__setattr__(self, "conditions", tuple(conds))
        for cond in self.conditions:
            if cond not in valid:
                raise ParameterError(
                    f"condition {cond!r} not valid for experiment {self.experiment}"
                )
        if self.session_direction not in ("1to2", "2to1", "both"):
            raise ParameterError(f"unknown session_direction {self.session_direction!r}")
        if not 0.0 < self.pca_threshold <= 1.0:
            raise ParameterError("pca_threshold must be in (0, 1]")
        if self.window_ms <= 0 or self.stride_ms <= 0 or self.central_s <= 0:
            raise ParameterError("window_ms, stride_ms and central_s must be positive")
        if self.seed < 0:
            raise ParameterError("seed must be non-negative")
        object.__setattr__(self, "feature_sets", tuple(self.feature_sets))
        object.__setattr__(self, "exclude_subjects", tuple(self.exclude_subjects))


def _grid_from_json(doc: dict) -> GridLayout:
    return GridLayout(
        rows=int(doc["rows"]),
        cols=int(doc["cols"]),
        module_width=int(doc["module_width"]),
        pitch_mm=float(doc["pitch_mm"]),
    )


def _grid_to_json(layout: GridLayout) -> dict:
    return {
        "rows": layout.rows,
        "cols": layout.cols,
        "module_width": layout.module_width,
        "pitch_mm": layout.pitch_mm,
    }


def _synthetic_from_json(doc: dict, seed: int) -> ingest.SyntheticSpec:
    kwargs = {"seed": seed}
    if "grid" in doc:
        kwargs["layout"] = _grid_from_json(doc["grid"])
    mapping = {
        "subjects": ("subjects", int),
        "gestures": ("G", int),
        "reps": ("reps", int),
        "duration_s": ("duration_s", float),
        "sources_per_gesture": ("sources_per_gesture", int),
        "spatial_sigma": ("spatial_sigma", float),
        "snr_db": ("snr_db", float),
        "session_row_shift": ("session_row_shift", int),
        "amplitude_jitter": ("amplitude_jitter", float),
        "fs_hz": ("fs", float),
    }
    for key, (attr, conv) in mapping.items():
        if key in doc:
            val = doc[key]
            kwargs[attr] = math.inf if val == "inf" else conv(val)
    return ingest.SyntheticSpec(**kwargs)


def _synthetic_to_json(spec: ingest.SyntheticSpec) -> dict:
    return {
        "subjects": spec.subjects,
        "gestures": spec.G,
        "reps": spec.reps,
        "duration_s": spec.duration_s,
        "sources_per_gesture": spec.sources_per_gesture,
        "spatial_sigma": spec.spatial_sigma,
        "snr_db": "inf" if math.isinf(spec.snr_db) else spec.snr_db,
        "session_row_shift": spec.session_row_shift,
        "amplitude_jitter": spec.amplitude_jitter,
        "fs_hz": spec.fs,
        "grid": _grid_to_json(spec.layout),
    }


def config_from_json(doc) -> ExperimentConfig:
    """Build a config from a dict or a JSON file path."""
    if isinstance(doc, (str, os.PathLike)):
        with open(doc, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ParameterError("config document must be a JSON object")
    if "experiment" not in doc:
        raise ParameterError("config is missing the 'experiment' key")
    seed = int(doc.get("seed", 0))
    kwargs = {"experiment": int(doc["experiment"]), "seed": seed}
    if "dataset" in doc:
        kwargs["dataset_root"] = str(doc["dataset"]["root"])
    if "synthetic" in doc:
        kwargs["synthetic"] = _synthetic_from_json(doc["synthetic"], seed)
    if "feature_sets" in doc:
        kwargs["feature_sets"] = tuple(doc["feature_sets"])
    if "conditions" in doc:
        kwargs["conditions"] = tuple(doc["conditions"])
    if "pca" in doc:
        kwargs["pca_enabled"] = bool(doc["pca"].get("enabled", False))
        if "threshold" in doc["pca"]:
            kwargs["pca_threshold"] = float(doc["pca"]["threshold"])
    if "filter" in doc:
        flt = doc["filter"]
        kwargs["filter_low_hz"] = float(flt.get("f_low_hz", 45.0))
        kwargs["filter_high_hz"] = float(flt.get("f_high_hz", 55.0))
        kwargs["filter_order"] = int(flt.get("order", 2))
    for key, conv in (
        ("window_ms", float),
        ("stride_ms", float),
        ("central_s", float),
        ("tau", float),
        ("lda_lambda", float),
        ("session_direction", str),
        ("column_offset", int),
        ("output_dir", str),
    ):
        if key in doc:
            kwargs[key] = conv(doc[key])
    if "exclude_subjects" in doc:
        kwargs["exclude_subjects"] = tuple(int(s) for s in doc["exclude_subjects"])
    return ExperimentConfig(**kwargs)


def config_to_json(cfg: ExperimentConfig) -> dict:
    doc = {
        "experiment": cfg.experiment,
        "feature_sets": list(cfg.feature_sets),
        "conditions": list(cfg.conditions),
        "pca": {"enabled": cfg.pca_enabled, "threshold": cfg.pca_threshold},
        "window_ms": cfg.window_ms,
        "stride_ms": cfg.stride_ms,
        "central_s": cfg.central_s,
        "filter": {
            "f_low_hz": cfg.filter_low_hz,
            "f_high_hz": cfg.filter_high_hz,
            "order": cfg.filter_order,
        },
        "tau": cfg.tau,
        "lda_lambda": cfg.lda_lambda,
        "seed": cfg.seed,
        "session_direction": cfg.session_direction,
        "column_offset": cfg.column_offset,
    }
    if cfg.dataset_root is not None:
        doc["dataset"] = {"root": cfg.dataset_root}
    if cfg.synthetic is not None:
        doc["synthetic"] = _synthetic_to_json(cfg.synthetic)
    if cfg.exclude_subjects:
        doc["exclude_subjects"] = list(cfg.exclude_subjects)
    if cfg.output_dir is not None:
        doc["output_dir"] = cfg.output_dir
    return doc


# -------------------------------------------------------------- data plumbing


def _load_recordings(cfg: ExperimentConfig, sessions) -> list:
    if cfg.synthetic is not None:
        spec = dataclasses.replace(cfg.synthetic, seed=cfg.seed)
        recs = ingest.generate_synthetic(spec, sessions=sessions)
    else:
        recs = [r for r in ingest.read_canonical(cfg.dataset_root) if r.session in sessions]
    recs = [r for r in recs if r.subject not in cfg.exclude_subjects]
    if not recs:
        raise ProtocolError("no recordings left after session/subject filtering")
    return recs


def split_intrasession(recordings: Sequence[Recording]):
    """Split one session's recordings into train (odd reps) and test (even reps).

    Every gesture must carry repetitions 1..10 exactly once; anything else is
    a protocol violation and the missing or duplicated labels are reported.
    """
    by_gesture: dict = {}
    for rec in recordings:
        by_gesture.setdefault(rec.gesture, []).append(rec)
    problems = []
    for gesture in sorted(by_gesture):
        reps = sorted(r.repetition for r in by_gesture[gesture])
        expected = list(range(1, _REPS_PER_GESTURE + 1))
        if reps != expected:
            missing = sorted(set(expected) - set(reps))
            extra = sorted(set(reps) - set(expected))
            dupes = sorted({r for r in reps if reps.count(r) > 1})
            desc = f"gesture {gesture}:"
            if missing:
                desc += f" missing reps {missing}"
            if extra:
                desc += f" unexpected reps {extra}"
            if dupes:
                desc += f" duplicated reps {dupes}"
            problems.append(desc)
    if problems:
        raise ProtocolError("repetition protocol violated; " + "; ".join(problems))
    train = [r for r in recordings if r.repetition in _TRAIN_REPS]
    test = [r for r in recordings if r.repetition in _TEST_REPS]
    return train, test


def build_windows(recordings: Sequence[Recording], cfg: ExperimentConfig) -> Dataset:
    """Filter, crop to the central segment and slide fixed-length windows."""
    if not recordings:
        raise ProtocolError("cannot build windows from an empty recording list")
    cascades: dict = {}
    windows = []
    max_gesture = 0
    for rec in recordings:
        if rec.fs not in cascades:
            cascades[rec.fs] = dsp.design_bandstop(
                rec.fs, cfg.filter_low_hz, cfg.filter_high_hz, cfg.filter_order
            )
        filtered = dsp.filter_apply(rec, cascades[rec.fs])
        segment = dsp.central_segment(filtered, cfg.central_s)
        seg_start = (rec.n_samples - segment.shape[1]) // 2
        t = int(round(cfg.window_ms * rec.fs / 1000.0))
        stride = int(round(cfg.stride_ms * rec.fs / 1000.0))
        samples32 = np.ascontiguousarray(segment, dtype=np.float32)
        n = dsp.window_count(samples32.shape[1], t, stride)
        for i in range(n):
            start = i * stride
            windows.append(
                LabeledWindow(
                    samples=samples32[:, start : start + t],
                    gesture=rec.gesture,
                    provenance=Provenance(
                        subject=rec.subject,
                        session=rec.session,
                        repetition=rec.repetition,
                        start_sample=seg_start + start,
                    ),
                )
            )
        max_gesture = max(max_gesture, rec.gesture)
    return Dataset(windows, max_gesture)


def _treat(dataset: Dataset, treatment: str, layout: GridLayout, column_offset: int) -> Dataset:
    if treatment == "AC":
        return dataset
    if treatment == "CS":
        central = subsets.central_subset(layout, column_offset)
        return Dataset([subsets.select_subset(w, central) for w in dataset], dataset.G)
    if treatment == "AVS":
        return subsets.augment_avs(dataset, layout, column_offset)
    raise ParameterError(f"unknown treatment {treatment!r}")


def _condition_treatments(condition: str, experiment: int):
    if experiment == 1:
        train_t, _, test_t = condition.partition("-")
        if not test_t or train_t not in _TREATMENTS or test_t not in _TREATMENTS:
            raise ParameterError(f"malformed condition {condition!r}")
        return train_t, test_t
    return _EXPERIMENT2_PAIRS[condition]


def run_condition(
    train: Dataset,
    test: Dataset,
    condition: str,
    feature_set: str,
    cfg: ExperimentConfig,
    layout: GridLayout,
    use_pca: Optional[bool] = None,
) -> float:
    """Accuracy of one (condition, feature set) cell.

    ``train`` and ``test`` are full-grid window sets; the condition decides
    the channel treatment on each side. Channel statistics, PCA basis and
    classifier are all fitted on training data only.
    """
    if use_pca is None:
        use_pca = cfg.pca_enabled
    train_t, test_t = _condition_treatments(condition, cfg.experiment)
    tr = _treat(train, train_t, layout, cfg.column_offset)
    te = _treat(test, test_t, layout, cfg.column_offset)
    if tr.N == 0 or te.N == 0:
        raise ProtocolError("condition produced an empty train or test set")

    channel_stats = dsp.fit_channel_stats(list(tr))
    fm_train = features.extract_features(tr, feature_set, tau=cfg.tau, stats=channel_stats)
    fm_test = features.extract_features(te, feature_set, tau=cfg.tau, stats=channel_stats)
    x_train, y_train = fm_train.values, fm_train.labels
    x_test, y_test = fm_test.values, fm_test.labels

    if use_pca:
        mu = x_train.mean(axis=0)
        sd = x_train.std(axis=0)
        sd = np.where(sd == 0.0, 1.0, sd)
        z_train = (x_train - mu) / sd
        z_test = (x_test - mu) / sd
        pca = learn.fit_pca(z_train, cfg.pca_threshold)
        x_train = learn.pca_transform(pca, z_train)
        x_test = learn.pca_transform(pca, z_test)

    model = learn.fit_lda(x_train, y_train, lam=cfg.lda_lambda)
    return learn.accuracy(model, x_test, y_test)


# ------------------------------------------------------------------ reporting


@dataclass(frozen=True)
class ReportCell:
    subject: int
    feature_set: str
    condition: str
    pca: bool
    accuracy: float


@dataclass(frozen=True)
class StatRow:
    comparison: str
    method: str
    statistic: float
    df: Optional[tuple]
    p_value: float
    flag: str = ""


@dataclass(frozen=True)
class ExperimentReport:
    experiment: int
    cells: tuple
    statistics: tuple
    config_echo: dict
    version: str

    def aggregates(self):
        """Per (feature set, condition, pca): n, mean and sample std across subjects."""
        keys = []
        seen = set()
        for c in self.cells:
            k = (c.feature_set, c.condition, c.pca)
            if k not in seen:
                seen.add(k)
                keys.append(k)
        rows = []
        for fs, cond, pca in keys:
            vals = [c.accuracy for c in self.cells if (c.feature_set, c.condition, c.pca) == (fs, cond, pca)]
            arr = np.asarray(vals)
            std = float(arr.std(ddof=1)) if arr.shape[0] > 1 else 0.0
            rows.append((fs, cond, pca, arr.shape[0], float(arr.mean()), std))
        return rows

    def cell_lookup(self):
        return {
            (c.subject, c.feature_set, c.condition, c.pca): c.accuracy for c in self.cells
        }


def _subject_feature_means(report: ExperimentReport, condition: str, pca: bool):
    """Per-subject accuracy averaged over feature sets for one condition."""
    subjects = sorted({c.subject for c in report.cells})
    fsets = list(dict.fromkeys(c.feature_set for c in report.cells))
    lookup = report.cell_lookup()
    return np.array(
        [np.mean([lookup[(s, f, condition, pca)] for f in fsets]) for s in subjects]
    )


def _experiment1_statistics(report: ExperimentReport, cfg: ExperimentConfig):
    rows = []
    pca = cfg.pca_enabled
    conds = list(cfg.conditions)
    # feature-set effect: one group per feature set, pooled over subjects x conditions
    if len(cfg.feature_sets) >= 2:
        groups = [
            [c.accuracy for c in report.cells if c.feature_set == fs and c.pca == pca]
            for fs in cfg.feature_sets
        ]
        if all(len(g) >= 2 for g in groups):
            r = stats.anova_oneway(groups)
            rows.append(
                StatRow(
                    "feature_set_effect",
                    r.method,
                    r.statistic,
                    r.df,
                    r.p_value,
                    "degenerate" if r.degenerate else "",
                )
            )
    # condition variance effect on per-subject feature-averaged scores
    if len(conds) >= 2:
        groups = [list(_subject_feature_means(report, c, pca)) for c in conds]
        if all(len(g) >= 2 for g in groups):
            r = stats.levene(groups)
            rows.append(
                StatRow(
                    "condition_variance",
                    r.method,
                    r.statistic,
                    r.df,
                    r.p_value,
                    "degenerate" if r.degenerate else "",
                )
            )
    # pairwise shift-vs-baseline comparisons against CS-CS
    if "CS-CS" in conds:
        base = _subject_feature_means(report, "CS-CS", pca)
        for cond in conds:
            if cond == "CS-CS":
                continue
            other = _subject_feature_means(report, cond, pca)
            if base.shape[0] < 2:
                rows.append(
                    StatRow(f"CS-CS_vs_{cond}", stats.WILCOXON_SR, 0.0, None, 1.0, "insufficient-n")
                )
                continue
            r = stats.wilcoxon_signed_rank(base, other)
            rows.append(
                StatRow(
                    f"CS-CS_vs_{cond}",
                    r.method,
                    r.statistic,
                    r.df,
                    r.p_value,
                    "degenerate" if r.degenerate else "",
                )
            )
    return rows


def _experiment2_statistics(report: ExperimentReport, cfg: ExperimentConfig):
    rows = []
    subjects = sorted({c.subject for c in report.cells})
    lookup = report.cell_lookup()
    pca_variants = [False, True] if cfg.pca_enabled else [False]
    for pca in pca_variants:
        suffix = "_pca" if pca else ""
        for fs in cfg.feature_sets:
            for baseline in ("CS", "AC"):
                if "AVS" not in cfg.conditions or baseline not in cfg.conditions:
                    continue
                a = np.array([lookup[(s, fs, "AVS", pca)] for s in subjects])
                b = np.array([lookup[(s, fs, baseline, pca)] for s in subjects])
                name = f"AVS_vs_{baseline}_{fs}{suffix}"
                if a.shape[0] < 2:
                    rows.append(StatRow(name, stats.PAIRED_T, 0.0, None, 1.0, "insufficient-n"))
                    continue
                r = stats.paired_t(a, b, alternative="greater")
                rows.append(
                    StatRow(
                        name,
                        r.method,
                        r.statistic,
                        r.df,
                        r.p_value,
                        "degenerate" if r.degenerate else "",
                    )
                )
    return rows


# ------------------------------------------------------------------- drivers


def run_experiment1(cfg: ExperimentConfig) -> ExperimentReport:
    """Intrasession condition matrix, one model per (subject, condition, feature set)."""
    if cfg.experiment != 1:
        raise ParameterError("config is not an experiment-1 config")
    recordings = _load_recordings(cfg, sessions=(1,))
    layout = recordings[0].layout
    by_subject: dict = {}
    for rec in recordings:
        by_subject.setdefault(rec.subject, []).append(rec)

    cells = []
    for subject in sorted(by_subject):
        train_recs, test_recs = split_intrasession(by_subject[subject])
        train = build_windows(train_recs, cfg)
        test = build_windows(test_recs, cfg)
        for feature_set in cfg.feature_sets:
            for condition in cfg.conditions:
                acc = run_condition(train, test, condition, feature_set, cfg, layout)
                cells.append(
                    ReportCell(subject, feature_set, condition, cfg.pca_enabled, acc)
                )

    report = ExperimentReport(
        experiment=1,
        cells=tuple(cells),
        statistics=(),
        config_echo=config_to_json(cfg),
        version=_version_string(),
    )
    return dataclasses.replace(
        report, statistics=tuple(_experiment1_statistics(report, cfg))
    )


def run_experiment2(cfg: ExperimentConfig) -> ExperimentReport:
    """Intersession transfer, one model per (subject, direction, condition, feature set)."""
    if cfg.experiment != 2:
        raise ParameterError("config is not an experiment-2 config")
    recordings = _load_recordings(cfg, sessions=(1, 2))
    layout = recordings[0].layout
    by_key: dict = {}
    for rec in recordings:
        by_key.setdefault((rec.subject, rec.session), []).append(rec)
    subjects = sorted({s for s, _ in by_key})
    for subject in subjects:
        for session in (1, 2):
            if (subject, session) not in by_key:
                raise ProtocolError(f"subject {subject} has no session {session} recordings")

    if cfg.session_direction == "1to2":
        directions = [(1, 2)]
    elif cfg.session_direction == "2to1":
        directions = [(2, 1)]
    else:
        directions = [(1, 2), (2, 1)]

    pca_variants = [False, True] if cfg.pca_enabled else [False]
    cells = []
    for subject in subjects:
        window_cache = {
            session: build_windows(by_key[(subject, session)], cfg)
            for session in (1, 2)
        }
        accs: dict = {}
        for train_sess, test_sess in directions:
            train = window_cache[train_sess]
            test = window_cache[test_sess]
            for feature_set in cfg.feature_sets:
                for condition in cfg.conditions:
                    for pca in pca_variants:
                        acc = run_condition(
                            train, test, condition, feature_set, cfg, layout, use_pca=pca
                        )
                        accs.setdefault((feature_set, condition, pca), []).append(acc)
        for feature_set in cfg.feature_sets:
            for condition in cfg.conditions:
                for pca in pca_variants:
                    vals = accs[(feature_set, condition, pca)]
                    cells.append(
                        ReportCell(
                            subject, feature_set, condition, pca, float(np.mean(vals))
                        )
                    )

    report = ExperimentReport(
        experiment=2,
        cells=tuple(cells),
        statistics=(),
        config_echo=config_to_json(cfg),
        version=_version_string(),
    )
    return dataclasses.replace(
        report, statistics=tuple(_experiment2_statistics(report, cfg))
    )


def run(cfg: ExperimentConfig) -> ExperimentReport:
    return run_experiment1(cfg) if cfg.experiment == 1 else run_experiment2(cfg)


# --------------------------------------------------------------- serialization


def _version_string() -> str:
    from . import __version__

    return f"semgshift-{__version__}"


def _fmt(x: float) -> str:
    return repr(float(x))


def _df_fields(df) -> tuple:
    if df is None:
        return "", ""
    if len(df) == 1:
        return repr(int(df[0])) if float(df[0]).is_integer() else repr(float(df[0])), ""
    return str(df[0]), str(df[1])


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    buf.write("subject,feature_set,condition,pca,accuracy\n")
    for c in report.cells:
        buf.write(f"{c.subject},{c.feature_set},{c.condition},{int(c.pca)},{_fmt(c.accuracy)}\n")
    return buf.getvalue()


def aggregate_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    buf.write("feature_set,condition,pca,n_subjects,mean_accuracy,std_accuracy\n")
    for fs, cond, pca, n, mean, std in report.aggregates():
        buf.write(f"{fs},{cond},{int(pca)},{n},{_fmt(mean)},{_fmt(std)}\n")
    return buf.getvalue()


def statistics_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    buf.write("comparison,method,statistic,df1,df2,p_value,flag\n")
    for row in report.statistics:
        df1, df2 = _df_fields(row.df)
        buf.write(
            f"{row.comparison},{row.method},{_fmt(row.statistic)},{df1},{df2},"
            f"{_fmt(row.p_value)},{row.flag}\n"
        )
    return buf.getvalue()


def report_markdown(report: ExperimentReport) -> str:
    lines = [f"# Experiment {report.experiment} report", ""]
    lines.append(f"Generated by {report.version}.")
    lines.append("")
    lines.append("## Mean accuracy across subjects")
    lines.append("")
    aggs = report.aggregates()
    pca_variants = sorted({pca for _, _, pca, _, _, _ in aggs})
    conditions = list(dict.fromkeys(cond for _, cond, _, _, _, _ in aggs))
    fsets = list(dict.fromkeys(fs for fs, _, _, _, _, _ in aggs))
    for pca in pca_variants:
        if len(pca_variants) > 1:
            lines.append(f"### {'With' if pca else 'Without'} PCA")
            lines.append("")
        header = "| feature set | " + " | ".join(conditions) + " |"
        sep = "|" + " --- |" * (len(conditions) + 1)
        lines.append(header)
        lines.append(sep)
        table = {(fs, cond): (m, s) for fs, cond, p, _, m, s in aggs if p == pca}
        for fs in fsets:
            cells = []
            for cond in conditions:
                if (fs, cond) in table:
                    m, s = table[(fs, cond)]
                    cells.append(f"{m:.3f} +/- {s:.3f}")
                else:
                    cells.append("-")
            lines.append("| " + fs + " | " + " | ".join(cells) + " |")
        lines.append("")
    if report.statistics:
        lines.append("## Statistical tests")
        lines.append("")
        lines.append("| comparison | method | statistic | df | p | flag |")
        lines.append("| --- | --- | --- | --- | --- | --- |")
        for row in report.statistics:
            df1, df2 = _df_fields(row.df)
            df_txt = f"({df1}, {df2})" if df2 else (df1 or "-")
            stat_txt = f"{row.statistic:.4f}" if math.isfinite(row.statistic) else "inf"
            lines.append(
                f"| {row.comparison} | {row.method} | {stat_txt} | {df_txt} "
                f"| {row.p_value:.6g} | {row.flag or '-'} |"
            )
        lines.append("")
    lines.append("## Configuration")
    lines.append("")
    lines.append("```json")
    lines.append(json.dumps(report.config_echo, indent=2, sort_keys=True))
    lines.append("```")
    lines.append("")
    return "\n".join(lines)


def write_report(report: ExperimentReport, out_dir) -> list:
    """Write report.csv, aggregate.csv, statistics.csv and report.md; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    artifacts = {
        "report.csv": report_csv(report),
        "aggregate.csv": aggregate_csv(report),
        "statistics.csv": statistics_csv(report),
        "report.md": report_markdown(report),
    }
    paths = []
    for name, text in artifacts.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        paths.append(path)
    return paths
