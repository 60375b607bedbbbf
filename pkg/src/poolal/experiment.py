"""Active-learning loop in benchmark and learn mode, plus resume-after-abort.

Random streams are derived from the experiment seed with
``SeedSequence(seed, spawn_key=...)``:

* ``(0,)`` draws the initial training set (benchmark mode only), so every
  method of one call starts from the same samples;
* ``(1,)`` feeds random selection, one draw per iteration;
* ``(2, iteration, member)`` seeds the optimizer restarts of one fit
  (member 0 is the tracked model, 1.. are QBC committee members).

Resuming replays stream ``(1,)`` for the completed iterations; the other
streams are keyed and need no replay.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from poolal import gp, history, metrics, selection
from poolal.dataset import IndexSets, draw_initial_set
from poolal.errors import ExperimentError, MetricError
from poolal.kernels import KernelSpec
from poolal.oracle import label

logger = logging.getLogger(__name__)

INIT_STREAM = 0
SELECT_STREAM = 1
FIT_STREAM = 2
DEFAULT_RESTARTS = 2


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def committee_snapshot_name(method: str, iteration: int, member: int) -> str:
    return f"model_{method}_{iteration:05d}_c{member}.json"


@dataclass
class ExperimentConfig:
    mode: str
    iterations: int
    methods: list[str]
    seed: int = 0
    output_dir: Path | str = "."
    metric: str = "rmse"
    init_set_size: int | None = None
    known_indices: list[int] | None = None
    known_labels: list[float] | None = None
    committee: list[KernelSpec] | None = None
    kernel: KernelSpec = field(default_factory=KernelSpec)
    optimize: bool = True
    restarts: int = DEFAULT_RESTARTS

    def validate(self, n: int) -> None:
        if self.mode not in history.MODES:
            raise ExperimentError(f"mode must be one of {history.MODES}, got {self.mode!r}")
        if int(self.iterations) < 1:
            raise ExperimentError(f"iterations must be >= 1, got {self.iterations}")
        if not self.methods:
            raise ExperimentError("at least one selection method is required")
        if len(set(self.methods)) != len(self.methods):
            raise ExperimentError(f"duplicate selection methods in {self.methods}")
        for m in self.methods:
            selection.check_method(m)
        if int(self.seed) < 0:
            raise ExperimentError(f"seed must be a nonnegative integer, got {self.seed}")
        if self.restarts < 0:
            raise ExperimentError("restarts must be >= 0")
        if self.committee is not None:
            selection.check_committee(self.committee)
        if self.mode == "benchmark":
            metrics.check_metric(self.metric)
            if self.init_set_size is None or not 1 <= self.init_set_size < n:
                raise ExperimentError(
                    f"init_set_size must satisfy 1 <= init_set_size < {n}, got {self.init_set_size}"
                )
            n_labeled = self.init_set_size
        else:
            known = list(self.known_indices or [])
            if not known:
                raise ExperimentError("learn mode needs nonempty known_indices")
            if self.known_labels is None or len(self.known_labels) != len(known):
                raise ExperimentError("known_labels must match known_indices in length")
            if len(set(known)) != len(known):
                raise ExperimentError(f"duplicate known indices in {known}")
            for i in known:
                if not 0 <= i < n:
                    raise ExperimentError(f"known index {i} outside pool of size {n}")
            n_labeled = len(known)
        if self.iterations > n - n_labeled:
            raise ExperimentError(
                f"{self.iterations} iterations exceed the {n - n_labeled} unlabeled samples"
            )


@dataclass
class MethodResult:
    method: str
    history_path: Path
    metric_series: list[float]
    auc: float | None
    runtime: float
    final_snapshot: Path
    labeled: list[int]


def _features(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise ExperimentError(f"feature matrix must be 2-D with at least 2 rows, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ExperimentError("feature matrix contains non-finite values")
    return X


class _MethodRun:
    """State of one method's loop; writes its own history file and snapshots."""

    def __init__(self, *, X, mode, method, seed, out_dir, metric, y, oracle, committee,
                 optimize, restarts):
        self.X = X
        self.n = X.shape[0]
        self.mode = mode
        self.method = method
        self.seed = seed
        self.out_dir = Path(out_dir)
        self.metric = metric if mode == "benchmark" else None
        self.y = y
        self.oracle = oracle
        self.committee_specs = committee
        self.optimize = optimize
        self.restarts = restarts
        self.history_path = self.out_dir / history.history_name(mode, method)

        self.sets: IndexSets | None = None
        self.labels: list[float] = []
        self.model: gp.GPModel | None = None
        self.committee_models: list[gp.GPModel] = []
        self.cache = None
        self.select_rng = stream(seed, SELECT_STREAM)
        self.metric_series: list[float] = []
        self.auc_cum = 0.0
        self.runtime_cum = 0.0
        self.iteration = 0

    # -- loop pieces -------------------------------------------------------

    def _fit(self, iteration, spec0, member):
        rng = stream(self.seed, FIT_STREAM, iteration, member)
        rows = self.sets.labeled
        return gp.fit(self.X[rows], self.labels, spec0, optimize=self.optimize,
                      restarts=self.restarts, rng=rng, indices=rows)

    def _fit_all(self, iteration, main_spec):
        self.model = self._fit(iteration, main_spec, 0)
        if self.method == "qbc":
            starts = ([m.spec for m in self.committee_models] if self.committee_models
                      else self.committee_specs)
            self.committee_models = [self._fit(iteration, spec, j + 1)
                                     for j, spec in enumerate(starts)]

    def _evaluate(self) -> float:
        held_out = self.sets.unlabeled_sorted()
        try:
            mean, _ = gp.predict_arrays(self.model, self.X[held_out])
            return metrics.score(self.metric, mean, self.y[held_out])
        except MetricError:
            # pool too small (or constant) to score: fall back to the whole pool
            mean, _ = gp.predict_arrays(self.model, self.X)
            return metrics.score(self.metric, mean, self.y)

    def _select(self) -> int:
        unl = self.sets.unlabeled
        if self.method == "random":
            return selection.select_random(unl, self.select_rng)
        if self.method == "uncertainty":
            return selection.select_uncertainty(self.model, self.X, unl)
        if self.method == "covariance":
            return selection.select_covariance(self.model, self.X, unl, self.cache)
        if self.method == "qbc":
            return selection.select_qbc(self.committee_models, self.X, unl)
        return selection.select_fft(self.X, self.sets.labeled, unl)

    def _label(self, index) -> float:
        if self.mode == "benchmark":
            return float(self.y[index])
        return label(self.oracle, self.X[index], index)

    def _write_record(self, iteration, elapsed):
        snap = history.snapshot_name(self.method, iteration)
        gp.snapshot_save(self.model, self.out_dir / snap)
        for j, member in enumerate(self.committee_models):
            gp.snapshot_save(member, self.out_dir / committee_snapshot_name(self.method, iteration, j))

        self.runtime_cum += elapsed
        record = history.RunRecord(
            snapshot_file=snap,
            labeled=list(self.sets.labeled),
            labels=list(self.labels),
            hyperparams=self.model.spec.hyperparams(),
            runtime_cum=self.runtime_cum,
        )
        if self.mode == "benchmark":
            value = self.metric_series[-1]
            if len(self.metric_series) > 1:
                self.auc_cum += (self.metric_series[-2] + value) / 2
            record.metric_value = value
            record.auc_cum = self.auc_cum
        history.append_record(self.history_path, record, self.mode)

    # -- public drivers ----------------------------------------------------

    def start(self, sets: IndexSets, labels, kernel: KernelSpec):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        header = history.RunHeader(history.start_stamp(), self.mode, self.method, self.seed,
                                   self.metric)
        history.write_header(self.history_path, header)

        t0 = time.perf_counter()
        self.sets = sets
        self.labels = [float(v) for v in labels]
        if self.method == "covariance":
            self.cache = selection.cache_init(self.X, sets.unlabeled)
        self._fit_all(0, kernel)
        if self.mode == "benchmark":
            self.metric_series.append(self._evaluate())
        self._write_record(0, time.perf_counter() - t0)

    def step(self):
        iteration = self.iteration + 1
        t0 = time.perf_counter()
        index = self._select()
        value = self._label(index)
        self.sets.move_to_labeled(index)
        self.labels.append(value)
        if self.cache is not None:
            selection.cache_remove(self.cache, self.X, index)
        self._fit_all(iteration, self.model.spec)
        if self.mode == "benchmark":
            self.metric_series.append(self._evaluate())
        self._write_record(iteration, time.perf_counter() - t0)
        self.iteration = iteration
        logger.info("%s iteration %d: labeled sample %d", self.method, iteration, index)

    def run(self, iterations: int):
        for _ in range(iterations):
            self.step()

    def result(self) -> MethodResult:
        return MethodResult(
            method=self.method,
            history_path=self.history_path,
            metric_series=list(self.metric_series),
            auc=self.auc_cum if self.mode == "benchmark" else None,
            runtime=self.runtime_cum,
            final_snapshot=self.out_dir / history.snapshot_name(self.method, self.iteration),
            labeled=list(self.sets.labeled),
        )


def _committee(config) -> list[KernelSpec]:
    return list(config.committee) if config.committee is not None else selection.default_committee()


def run_benchmark(config: ExperimentConfig, X, y) -> dict[str, MethodResult]:
    """Replay a fully labeled pool, revealing one label per iteration and method."""
    X = _features(X)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.shape[0]:
        raise ExperimentError(f"{y.shape[0]} labels for {X.shape[0]} samples")
    if not np.all(np.isfinite(y)):
        raise ExperimentError("labels contain non-finite values")
    if config.mode != "benchmark":
        raise ExperimentError("run_benchmark needs a benchmark-mode config")
    config.validate(X.shape[0])

    results = {}
    for method in config.methods:
        init = draw_initial_set(X.shape[0], config.init_set_size, stream(config.seed, INIT_STREAM))
        run = _MethodRun(X=X, mode="benchmark", method=method, seed=config.seed,
                         out_dir=config.output_dir, metric=config.metric, y=y, oracle=None,
                         committee=_committee(config), optimize=config.optimize,
                         restarts=config.restarts)
        run.start(init, y[init.labeled], config.kernel)
        run.run(config.iterations)
        results[method] = run.result()
    return results


def run_learn(config: ExperimentConfig, X, oracle) -> dict[str, MethodResult]:
    """Acquire labels from ``oracle(x, index)`` for the selected samples.

    An oracle failure propagates as :class:`OracleError` after every completed
    iteration has been written, so the history can be resumed.
    """
    X = _features(X)
    if config.mode != "learn":
        raise ExperimentError("run_learn needs a learn-mode config")
    if oracle is None or not callable(oracle):
        raise ExperimentError("learn mode needs a callable oracle")
    config.validate(X.shape[0])

    results = {}
    for method in config.methods:
        sets = IndexSets.from_labeled(config.known_indices, X.shape[0])
        run = _MethodRun(X=X, mode="learn", method=method, seed=config.seed,
                         out_dir=config.output_dir, metric=None, y=None, oracle=oracle,
                         committee=_committee(config), optimize=config.optimize,
                         restarts=config.restarts)
        run.start(sets, config.known_labels, config.kernel)
        run.run(config.iterations)
        results[method] = run.result()
    return results


def _replay_random(run, first_labeled, chosen):
    """Advance the selection stream through completed random draws, checking each."""
    sets = IndexSets.from_labeled(first_labeled, run.n)
    for index in chosen:
        drawn = selection.select_random(sets.unlabeled, run.select_rng)
        if drawn != index:
            raise ExperimentError(
                f"replayed random draw {drawn} does not match recorded sample {index}; "
                "the dataset or seed differs from the original run"
            )
        sets.move_to_labeled(index)


def resume(history_path, extra_iterations: int, X, y=None, oracle=None, committee=None,
           optimize: bool = True, restarts: int = DEFAULT_RESTARTS) -> MethodResult:
    """Continue the experiment recorded in ``history_path`` for ``extra_iterations``.

    Mode, method, seed and metric come from the file header. The dataset must
    be the one the history was produced from; benchmark files also need the
    labels ``y``, learn files an ``oracle``.
    """
    history_path = Path(history_path)
    header, records = history.parse_history(history_path)
    if header.mode == "learn" and oracle is None:
        raise ExperimentError("resuming a learn-mode history requires an oracle")
    if header.mode == "benchmark" and y is None:
        raise ExperimentError("resuming a benchmark history requires the original labels")
    if extra_iterations < 0:
        raise ExperimentError("extra_iterations must be >= 0")
    if not records:
        raise ExperimentError(f"{history_path}: no records to resume from")

    X = _features(X)
    n = X.shape[0]
    if y is not None:
        y = np.asarray(y, dtype=float).ravel()
        if y.shape[0] != n:
            raise ExperimentError(f"{y.shape[0]} labels for {n} samples")
    out_dir = history_path.parent
    last = records[-1]
    for i in last.labeled:
        if not 0 <= i < n:
            raise ExperimentError(f"recorded index {i} outside the pool of size {n}")
    if header.mode == "benchmark" and [float(v) for v in y[last.labeled]] != last.labels:
        raise ExperimentError("recorded labels do not match the supplied dataset")

    model = gp.snapshot_load(out_dir / last.snapshot_file)
    if list(model.train_indices) != last.labeled:
        raise ExperimentError(f"snapshot {last.snapshot_file} does not match the last record")

    method = selection.check_method(header.method)
    done = len(records) - 1
    first = records[0].labeled
    remaining = n - len(last.labeled)
    if extra_iterations > remaining:
        raise ExperimentError(f"{extra_iterations} iterations exceed the {remaining} unlabeled samples")

    if committee is not None:
        committee = selection.check_committee(committee)
    run = _MethodRun(X=X, mode=header.mode, method=method, seed=header.seed, out_dir=out_dir,
                     metric=header.metric, y=y, oracle=oracle,
                     committee=committee or selection.default_committee(),
                     optimize=optimize, restarts=restarts)
    run.sets = IndexSets.from_labeled(last.labeled, n)
    run.labels = list(last.labels)
    run.model = model
    run.iteration = done
    run.runtime_cum = last.runtime_cum
    if header.mode == "benchmark":
        run.metric_series = [r.metric_value for r in records]
        run.auc_cum = last.auc_cum

    chosen = last.labeled[len(first):]
    if method == "random":
        _replay_random(run, first, chosen)
    elif method == "covariance":
        run.cache = selection.cache_init(X, IndexSets.from_labeled(first, n).unlabeled)
        for index in chosen:
            selection.cache_remove(run.cache, X, index)
    elif method == "qbc" and committee is None:
        members = []
        while (path := out_dir / committee_snapshot_name(method, done, len(members))).is_file():
            members.append(gp.snapshot_load(path))
        if len(members) < 2:
            raise ExperimentError(f"committee snapshots for iteration {done} are missing")
        run.committee_models = members
        run.committee_specs = [m.spec for m in members]
    elif method == "qbc":
        # a new committee is refit from its own specs on the current labels
        for j, spec in enumerate(committee):
            run.committee_models.append(run._fit(done, spec, j + 1))

    run.run(extra_iterations)
    return run.result()

