"""Datasets, template libraries, evaluation reports and SNR sweeps.

Every sample is addressed by ``(label, index)`` and derives its own random
streams from ``SeedSequence([seed, label, index])``, so a sample can be
regenerated on its own (for example with more noise) and the result does
not depend on generation order or worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chanvese import evolve
from .config import PipelineConfig, activity_names, sample_profile
from .corners import find_seeds
from .echo import EchoMatrix, NoiseModel, _noise, clean_echo, measure_snr_db
from .maps import RadarMap, echo_to_map
from .topology import (
    EmptyContourError,
    PointCloud,
    TemplateLibrary,
    classify,
    contour_pointcloud,
)

__all__ = [
    "SampleKey",
    "LabeledMaps",
    "Signature",
    "EvaluationReport",
    "synthesize_sample",
    "map_for_sample",
    "extract_signature",
    "generate_dataset",
    "split_dataset",
    "build_templates",
    "evaluate",
    "snr_sweep",
]

STAGES = ("echo", "map", "seeds", "chan_vese", "contour", "classify")


@dataclass(frozen=True, order=True)
class SampleKey:
    label: int
    index: int

    @property
    def sample_id(self) -> str:
        return f"S{self.label:02d}-{self.index:04d}"


def _streams(seed: int, key: SampleKey):
    ss = np.random.SeedSequence([int(seed), int(key.label), int(key.index)])
    profile_ss, noise_ss = ss.spawn(2)
    return np.random.default_rng(profile_ss), int(noise_ss.generate_state(1, np.uint64)[0] >> 1)


def synthesize_sample(config: PipelineConfig, key: SampleKey, seed: int,
                      snr_delta_db: float = 0.0):
    """Echo of one sample plus its realized SNR in dB (nan for empty scenes).

    ``snr_delta_db <= 0`` multiplies the noise variance by
    ``10 ** (-snr_delta_db / 10)``; the noise realization itself is fixed by
    the seed, so the realized SNR moves by exactly the requested amount.
    """
    if snr_delta_db > 0:
        raise ValueError("snr_delta_db must be <= 0")
    profile_rng, noise_seed = _streams(seed, key)
    profile = sample_profile(key.label, profile_rng, config)
    clean = clean_echo(config.radar, config.wall, profile)
    variance = config.noise.variance * 10.0 ** (-snr_delta_db / 10.0)
    noise = _noise(clean.shape, NoiseModel(variance, noise_seed))
    noisy = clean + noise
    snr = np.nan
    if profile is not None and variance > 0:
        # SNR of the moving target alone: the static wall carries no signature
        moving = clean - clean_echo(config.radar, config.wall, None)
        snr = measure_snr_db(moving, moving + noise)
    return EchoMatrix(noisy, config.radar), float(snr)


def map_for_sample(config: PipelineConfig, echo: EchoMatrix) -> RadarMap:
    return echo_to_map(echo, config.map_type, config.emd, config.stft, tuple(config.image_size))


@dataclass
class Signature:
    """Contour point cloud of one map; ``cloud`` is None for an empty contour."""

    cloud: PointCloud | None
    seeds: object
    corners: object
    segmentation: object
    status: str = "ok"


def extract_signature(config: PipelineConfig, rmap, timings: dict | None = None) -> Signature:
    """Threshold, corner seeds, Chan-Vese evolution and the zero contour of ``phi1``."""
    timings = timings if timings is not None else {}
    t0 = time.perf_counter()
    seeds, corners = find_seeds(rmap, config.cut_threshold, config.sift)
    t1 = time.perf_counter()
    seg = evolve(rmap.pixels if isinstance(rmap, RadarMap) else rmap, seeds, config.chan_vese)
    t2 = time.perf_counter()
    try:
        cloud, status = contour_pointcloud(seg.phi1), "ok"
    except EmptyContourError:
        cloud, status = None, "empty_contour"
    t3 = time.perf_counter()
    timings["seeds"] = timings.get("seeds", 0.0) + t1 - t0
    timings["chan_vese"] = timings.get("chan_vese", 0.0) + t2 - t1
    timings["contour"] = timings.get("contour", 0.0) + t3 - t2
    if corners is None:
        status = "fallback_seeds" if status == "ok" else status
    return Signature(cloud, seeds, corners, seg, status)


@dataclass
class LabeledMaps:
    """Maps with labels; ``keys[i]`` identifies ``maps[i]``."""

    keys: list
    maps: list
    seed: int
    snr_delta_db: float
    config_hash: str
    map_type: str
    snr_db: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def __len__(self):
        return len(self.keys)

    @property
    def labels(self) -> np.ndarray:
        return np.array([k.label for k in self.keys], dtype=int)

    def subset(self, keys) -> "LabeledMaps":
        pos = {k: i for i, k in enumerate(self.keys)}
        idx = [pos[k] for k in keys]
        return LabeledMaps([self.keys[i] for i in idx], [self.maps[i] for i in idx], self.seed,
                           self.snr_delta_db, self.config_hash, self.map_type,
                           [self.snr_db[i] for i in idx] if self.snr_db else [])


def _one_map(args):
    config, key, seed, delta = args
    t0 = time.perf_counter()
    echo, snr = synthesize_sample(config, key, seed, delta)
    t1 = time.perf_counter()
    rmap = map_for_sample(config, echo)
    t2 = time.perf_counter()
    return rmap, snr, t1 - t0, t2 - t1


def _run(fn, jobs, n_jobs):
    if n_jobs is None or n_jobs <= 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        # map() returns results in submission order
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * n_jobs))))


def generate_dataset(config: PipelineConfig, samples_per_class: int | None = None, seed: int = 0,
                     *, snr_delta_db: float = 0.0, keys=None, n_jobs: int = 1) -> LabeledMaps:
    """Synthesize and map ``samples_per_class`` samples for every configured class.

    Pass ``keys`` instead to regenerate specific samples. Identical
    arguments give bit-identical maps.
    """
    if keys is None:
        if samples_per_class is None or samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")
        keys = [SampleKey(int(c), i) for c in config.classes for i in range(samples_per_class)]
    keys = list(keys)
    if not keys:
        raise ValueError("no samples requested")
    unknown = {k.label for k in keys} - set(config.classes)
    if unknown:
        raise ValueError(f"labels {sorted(unknown)} are not configured classes")
    start = time.perf_counter()
    results = _run(_one_map, [(config, k, seed, snr_delta_db) for k in keys], n_jobs)
    timings = {"echo": sum(r[2] for r in results), "map": sum(r[3] for r in results)}
    return LabeledMaps(keys, [r[0] for r in results], int(seed), float(snr_delta_db),
                       config.config_hash(), config.map_type, [r[1] for r in results], timings,
                       time.perf_counter() - start)


def split_dataset(dataset: LabeledMaps, per_class: int, random_state: int = 0):
    """Seeded per-class draw without replacement: ``(template_pool_order, rest)``.

    Returns two key lists. The first holds, for each class, all of that
    class's keys in a random order (templates are taken from its front);
    the second holds the keys not among the first ``per_class`` of each class.
    """
    rng = np.random.default_rng(random_state)
    pool, rest = [], []
    for label in sorted(set(dataset.labels.tolist())):
        ks = sorted(k for k in dataset.keys if k.label == label)
        if len(ks) < per_class:
            raise ValueError(f"class {label} has {len(ks)} samples; {per_class} templates requested")
        order = [ks[i] for i in rng.permutation(len(ks))]
        pool.append(order)
        rest.extend(sorted(order[per_class:]))
    return pool, rest


def signature_params(config: PipelineConfig) -> dict:
    """Settings a library must share with the data it classifies."""
    d = config.to_dict()
    keep = ("radar", "wall", "emd", "stft", "sift", "chan_vese", "mapper", "map_type",
            "image_size", "cut_threshold")
    return {k: d[k] for k in keep}


def build_templates(dataset: LabeledMaps, per_class: int, config: PipelineConfig,
                    random_state: int = 0, timings: dict | None = None):
    """Template library of ``per_class`` clouds per class, plus the keys used.

    Candidates are drawn in seeded random order without replacement; a
    candidate whose level set has no zero crossing cannot serve as a
    template and is replaced by the next one drawn. The validation keys are
    those never selected.
    """
    if dataset.map_type != config.map_type:
        raise ValueError("dataset map type differs from the configuration")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    pools, _ = split_dataset(dataset, per_class, random_state)
    index = {k: i for i, k in enumerate(dataset.keys)}
    classes, used, skipped = {}, [], []
    for order in pools:
        label = order[0].label
        clouds = []
        for key in order:
            if len(clouds) == per_class:
                break
            sig = extract_signature(config, dataset.maps[index[key]], timings)
            if sig.cloud is None:
                skipped.append(key)
                continue
            clouds.append(sig.cloud)
            used.append(key)
        if len(clouds) < per_class:
            raise ValueError(f"class {label}: only {len(clouds)} samples yield a contour; "
                             f"{per_class} templates requested")
        classes[label] = clouds
    hyper = signature_params(config)
    hyper["template_keys"] = [k.sample_id for k in used]
    hyper["skipped_keys"] = [k.sample_id for k in skipped]
    library = TemplateLibrary(classes, config.map_type, hyper)
    chosen = set(used) | set(skipped)
    validation = sorted(k for k in dataset.keys if k not in chosen)
    return library, validation


@dataclass
class EvaluationReport:
    labels: list
    sample_ids: list
    true: np.ndarray
    predicted: np.ndarray
    class_scores: np.ndarray
    statuses: list
    timings: dict
    wall_clock_s: float
    snr_delta_db: float = 0.0

    @property
    def accuracy(self) -> float:
        return float(np.mean(self.true == self.predicted))

    @property
    def confusion(self) -> np.ndarray:
        pos = {lab: i for i, lab in enumerate(self.labels)}
        cm = np.zeros((len(self.labels), len(self.labels)), dtype=int)
        for t, p in zip(self.true, self.predicted):
            cm[pos[int(t)], pos[int(p)]] += 1
        return cm

    def per_class_accuracy(self) -> dict:
        out = {}
        for lab in self.labels:
            sel = self.true == lab
            out[lab] = float(np.mean(self.predicted[sel] == lab)) if sel.any() else float("nan")
        return out

    def report_rows(self):
        header = (["sample_id", "true_label", "predicted_label", "correct", "status"]
                  + [f"score_{lab}" for lab in self.labels])
        rows = []
        for i, sid in enumerate(self.sample_ids):
            rows.append([sid, int(self.true[i]), int(self.predicted[i]),
                         int(self.true[i] == self.predicted[i]), self.statuses[i]]
                        + [repr(float(s)) for s in self.class_scores[i]])
        return header, rows

    def confusion_rows(self):
        names = activity_names()
        header = ["true\\predicted"] + [str(lab) for lab in self.labels] + ["name"]
        rows = [[str(lab)] + [int(v) for v in row] + [names.get(lab, "")]
                for lab, row in zip(self.labels, self.confusion)]
        return header, rows

    def summary(self) -> dict:
        return {"accuracy": self.accuracy, "n_samples": int(len(self.true)),
                "per_class_accuracy": {str(k): v for k, v in self.per_class_accuracy().items()},
                "snr_delta_db": self.snr_delta_db, "timings_s": dict(self.timings),
                "wall_clock_s": self.wall_clock_s}


def _classify_one(args):
    config, rmap, library = args
    timings = {}
    sig = extract_signature(config, rmap, timings)
    t0 = time.perf_counter()
    if sig.cloud is None:
        # no contour: zero similarity to every template, so the tie rule applies
        scores = {lab: [0.0] * library.per_class for lab in library.labels}
        label = min(library.labels)
    else:
        m = config.mapper
        label, scores = classify(sig.cloud, library, m.n_x, m.n_y, m.overlap_factor)
    timings["classify"] = time.perf_counter() - t0
    sums = [float(np.sum(scores[lab])) for lab in library.labels]
    return label, sums, sig.status, timings


def evaluate(dataset: LabeledMaps, library: TemplateLibrary, config: PipelineConfig,
             keys=None, n_jobs: int = 1) -> EvaluationReport:
    """Classify every sample (or the given ``keys``) against ``library``.

    Stage timings cover segmentation and classification, plus echo synthesis
    and mapping when the whole dataset is evaluated (a subset carries no
    generation cost). ``wall_clock_s`` spans the same work, so with
    ``n_jobs=1`` the stage totals add up to it.
    """
    start = time.perf_counter()
    if dataset.map_type != library.map_type or config.map_type != library.map_type:
        raise ValueError(f"map type mismatch: data {dataset.map_type!r}, "
                         f"library {library.map_type!r}, config {config.map_type!r}")
    expected = signature_params(config)
    stored = {k: library.hyperparameters.get(k) for k in expected}
    if library.hyperparameters and stored != expected:
        diff = sorted(k for k in expected if stored[k] != expected[k])
        raise ValueError(f"library hyperparameters differ from the configuration: {diff}")
    sub = dataset if keys is None else dataset.subset(keys)
    if len(sub) == 0:
        raise ValueError("empty validation set")
    results = _run(_classify_one, [(config, m, library) for m in sub.maps], n_jobs)
    timings = {s: 0.0 for s in STAGES}
    timings["echo"] = sub.timings.get("echo", 0.0)
    timings["map"] = sub.timings.get("map", 0.0)
    for r in results:
        for s, v in r[3].items():
            timings[s] += v
    return EvaluationReport(
        labels=list(library.labels),
        sample_ids=[k.sample_id for k in sub.keys],
        true=sub.labels,
        predicted=np.array([r[0] for r in results], dtype=int),
        class_scores=np.array([r[1] for r in results], dtype=float),
        statuses=[r[2] for r in results],
        timings=timings,
        wall_clock_s=time.perf_counter() - start + sub.wall_clock_s,
        snr_delta_db=sub.snr_delta_db,
    )


@dataclass
class SweepResult:
    deltas_db: list
    reports: list
    realized_drop_db: list

    @property
    def accuracies(self) -> list:
        return [r.accuracy for r in self.reports]

    @property
    def baseline_accuracy(self) -> float:
        """Accuracy of the 0 dB row, or of the first row when 0 dB was not run."""
        for d, r in zip(self.deltas_db, self.reports):
            if d == 0:
                return r.accuracy
        return self.reports[0].accuracy if self.reports else float("nan")

    def rows(self):
        header = ["delta_snr_db", "realized_drop_db", "accuracy", "n_samples",
                  "accuracy_drop_points"]
        base = self.baseline_accuracy
        rows = [[repr(float(d)), repr(float(g)), repr(r.accuracy), len(r.true),
                 repr(100.0 * (base - r.accuracy))]
                for d, g, r in zip(self.deltas_db, self.realized_drop_db, self.reports)]
        return header, rows


def snr_sweep(config: PipelineConfig, deltas_db, seed: int = 0, *, dataset: LabeledMaps | None = None,
              library: TemplateLibrary | None = None, validation_keys=None,
              samples_per_class: int | None = None, n_jobs: int = 1) -> SweepResult:
    """Accuracy as the validation noise grows; templates stay fixed.

    Without ``dataset``/``library`` a fresh dataset of ``samples_per_class``
    (default templates + validation per class) is generated at the base
    noise level and templates are built from it.
    """
    deltas = [float(d) for d in deltas_db]
    if not deltas:
        raise ValueError("no SNR deltas given")
    if any(d > 0 for d in deltas):
        raise ValueError("SNR deltas must be <= 0 dB")
    if library is None:
        if dataset is None:
            n = samples_per_class or (config.split.templates_per_class
                                      + config.split.validation_per_class)
            dataset = generate_dataset(config, n, seed, n_jobs=n_jobs)
        library, validation_keys = build_templates(dataset, config.split.templates_per_class,
                                                   config, random_state=seed)
    if validation_keys is None:
        raise ValueError("validation_keys are required when a library is supplied")
    ref = _mean_snr(config, validation_keys, seed, 0.0)
    reports, drops = [], []
    for d in deltas:
        data = generate_dataset(config, seed=seed, snr_delta_db=d, keys=validation_keys,
                                n_jobs=n_jobs)
        reports.append(evaluate(data, library, config, n_jobs=n_jobs))
        snr = np.array(data.snr_db, dtype=float)
        snr = snr[np.isfinite(snr)]
        drops.append(float(np.mean(snr)) - ref if len(snr) else float("nan"))
    return SweepResult(deltas, reports, drops)


def _mean_snr(config, keys, seed, delta) -> float:
    """Mean realized SNR over the non-empty scenes among ``keys`` (echo only)."""
    vals = [synthesize_sample(config, k, seed, delta)[1] for k in keys]
    vals = [v for v in vals if np.isfinite(v)]
    return float(np.mean(vals)) if vals else float("nan")
