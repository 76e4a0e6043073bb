"""Command line entry point: ``twrhar <subcommand> [options]``.

Every subcommand takes ``--config FILE`` (JSON, see ``twrhar simulate
--dump-config``), ``--preset desk|full`` and repeated ``--set
section.field=VALUE`` overrides, where VALUE is parsed as JSON when possible.
Commands that produce files write a ``manifest.json`` next to them. On
failure the last line on stderr is a JSON object ``{"error": ..., "message":
...}`` and the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig, preset
from .corners import threshold_truncate
from .harness import (
    SampleKey,
    build_templates,
    evaluate,
    extract_signature,
    generate_dataset,
    map_for_sample,
    snr_sweep,
    synthesize_sample,
)
from .io import (
    overlay_points,
    read_echo,
    read_map,
    write_echo,
    write_field,
    write_map,
    write_pbm,
    write_pgm,
    write_points_csv,
    write_rows_csv,
)
from .maps import echo_to_map
from .topology import TemplateLibrary, classify

EXIT_FAILURE = 1


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(args) -> PipelineConfig:
    if args.config:
        cfg = PipelineConfig.from_json(args.config)
    else:
        cfg = preset(args.preset)
    changes = {}
    for item in args.set or []:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        value = _parse_value(value)
        if isinstance(value, list):
            value = tuple(value)
        changes[key.replace(".", "__")] = value
    if getattr(args, "map_type", None):
        changes["map_type"] = args.map_type
    return cfg.with_overrides(**changes) if changes else cfg


def _versions():
    import scipy
    import skimage
    import sklearn
    return {"twrhar": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "scikit-image": skimage.__version__,
            "scikit-learn": sklearn.__version__}


def write_manifest(out_dir: Path, command: str, cfg: PipelineConfig, seed, outputs, extra=None):
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "seed": seed,
        "versions": _versions(),
        "outputs": sorted(str(o) for o in outputs),
        "created_unix": time.time(),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    if path.exists() and command == "templates":
        # the library already wrote its manifest here; add the run fields to it
        manifest = {**json.loads(path.read_text()), **manifest}
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def _labels(cfg, text):
    if not text:
        return list(cfg.classes)
    return [int(v) for v in text.split(",")]


def cmd_simulate(args):
    cfg = load_config(args)
    if args.dump_config:
        print(cfg.to_json())
        return 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for label in _labels(cfg, args.labels):
        for index in range(args.count):
            key = SampleKey(label, index)
            echo, snr = synthesize_sample(cfg, key, args.seed, args.snr_delta)
            outputs.append(write_echo(out / f"{key.sample_id}.echo", echo).name)
            print(f"{key.sample_id} snr_db={snr:.3f}")
    write_manifest(out, "simulate", cfg, args.seed, outputs, {"snr_delta_db": args.snr_delta})
    return 0


def _inputs(paths, suffix):
    files = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob(f"*{suffix}")) if p.is_dir() else [p])
    if not files:
        raise FileNotFoundError(f"no {suffix} inputs found in {paths}")
    return files


def cmd_maps(args):
    cfg = load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for f in _inputs(args.inputs, ".echo"):
        echo = read_echo(f, cfg.radar)
        rmap = echo_to_map(echo, cfg.map_type, cfg.emd, cfg.stft, tuple(cfg.image_size))
        stem = f"{f.stem}.{cfg.map_type}"
        outputs.append(write_map(out / f"{stem}.map", rmap).name)
        outputs.append(write_pgm(out / f"{stem}.pgm", rmap.pixels).name)
        print(f"{f.name} -> {stem}.map")
    write_manifest(out, "maps", cfg, None, outputs)
    return 0


def cmd_templates(args):
    cfg = load_config(args)
    out = Path(args.out)
    per_class = args.per_class or cfg.split.templates_per_class
    pool = per_class + cfg.split.validation_per_class
    t0 = time.perf_counter()
    data = generate_dataset(cfg, pool, args.seed, n_jobs=args.jobs)
    library, validation = build_templates(data, per_class, cfg, random_state=args.seed)
    library.hyperparameters["seed"] = args.seed
    library.hyperparameters["pool_per_class"] = pool
    library.save(out)
    write_manifest(out, "templates", cfg, args.seed, ["manifest.json"],
                   {"templates": len(library), "validation_keys": [k.sample_id for k in validation],
                    "wall_clock_s": time.perf_counter() - t0})
    print(f"library: {len(library)} templates, {per_class} per class -> {out}")
    return 0


def _validation_keys(cfg, library):
    pool = library.hyperparameters.get("pool_per_class",
                                       cfg.split.templates_per_class + cfg.split.validation_per_class)
    used = set(library.hyperparameters.get("template_keys", []))
    used |= set(library.hyperparameters.get("skipped_keys", []))
    return [SampleKey(c, i) for c in library.labels for i in range(pool)
            if SampleKey(c, i).sample_id not in used]


def _write_report(out, report):
    header, rows = report.report_rows()
    write_rows_csv(out / "report.csv", header, rows)
    header, rows = report.confusion_rows()
    write_rows_csv(out / "confusion.csv", header, rows)


def cmd_evaluate(args):
    cfg = load_config(args)
    library = TemplateLibrary.load(args.library)
    seed = args.seed if args.seed is not None else library.hyperparameters.get("seed", 0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    keys = _validation_keys(cfg, library)
    t0 = time.perf_counter()
    data = generate_dataset(cfg, seed=seed, keys=keys, snr_delta_db=args.snr_delta, n_jobs=args.jobs)
    report = evaluate(data, library, cfg, n_jobs=args.jobs)
    _write_report(out, report)
    summary = report.summary()
    summary["run_wall_clock_s"] = time.perf_counter() - t0
    write_manifest(out, "evaluate", cfg, seed, ["report.csv", "confusion.csv"], {"summary": summary})
    print(f"accuracy {report.accuracy:.4f} over {len(report.true)} samples")
    return 0


def cmd_classify(args):
    cfg = load_config(args)
    library = TemplateLibrary.load(args.library)
    rows = []
    for f in _inputs(args.inputs, ".map"):
        rmap = read_map(f)
        if rmap.kind != library.map_type:
            raise ValueError(f"{f.name} is a {rmap.kind} map but the library holds {library.map_type}")
        sig = extract_signature(cfg, rmap)
        if sig.cloud is None:
            label, sums = min(library.labels), [0.0] * len(library.labels)
        else:
            m = cfg.mapper
            label, scores = classify(sig.cloud, library, m.n_x, m.n_y, m.overlap_factor)
            sums = [float(np.sum(scores[c])) for c in library.labels]
        rows.append([f.name, label, sig.status] + [repr(s) for s in sums])
        print(f"{f.name} -> {label}")
    if args.out:
        header = ["file", "predicted_label", "status"] + [f"score_{c}" for c in library.labels]
        write_rows_csv(args.out, header, rows)
    return 0


def cmd_sweep(args):
    cfg = load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    deltas = [float(d) for d in args.deltas.split(",")]
    t0 = time.perf_counter()
    if args.library:
        library = TemplateLibrary.load(args.library)
        seed = args.seed if args.seed is not None else library.hyperparameters.get("seed", 0)
        result = snr_sweep(cfg, deltas, seed, library=library,
                           validation_keys=_validation_keys(cfg, library), n_jobs=args.jobs)
    else:
        seed = args.seed if args.seed is not None else 0
        result = snr_sweep(cfg, deltas, seed, n_jobs=args.jobs)
    header, rows = result.rows()
    write_rows_csv(out / "sweep.csv", header, rows)
    for d, rep in zip(result.deltas_db, result.reports):
        sub = out / f"delta_{d:+.1f}dB"
        sub.mkdir(exist_ok=True)
        _write_report(sub, rep)
    write_manifest(out, "sweep", cfg, seed, ["sweep.csv"],
                   {"wall_clock_s": time.perf_counter() - t0,
                    "accuracies": dict(zip(map(str, result.deltas_db), result.accuracies))})
    for r in rows:
        print(",".join(map(str, r)))
    return 0


def cmd_render(args):
    cfg = load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.map:
        rmap = read_map(args.map)
        stem = Path(args.map).stem
    else:
        key = SampleKey(args.label, args.index)
        echo, _ = synthesize_sample(cfg, key, args.seed, args.snr_delta)
        rmap = map_for_sample(cfg, echo)
        stem = f"{key.sample_id}.{cfg.map_type}"
        write_map(out / f"{stem}.map", rmap)
    outputs = [write_pgm(out / f"{stem}.pgm", rmap.pixels).name]
    binary = threshold_truncate(rmap, cfg.cut_threshold)
    outputs.append(write_pbm(out / f"{stem}.binary.pbm", binary.pixels).name)
    sig = extract_signature(cfg, rmap)
    pts = [sig.seeds.near, sig.seeds.far]
    if sig.corners is not None:
        outputs.append(write_points_csv(out / f"{stem}.corners.csv", sig.corners.points,
                                        ("row", "col")).name)
        pts = list(map(tuple, sig.corners.points)) + pts
    outputs.append(write_points_csv(out / f"{stem}.seeds.csv", [sig.seeds.near, sig.seeds.far],
                                    ("row", "col")).name)
    outputs.append(write_pgm(out / f"{stem}.corners.pgm", overlay_points(rmap.pixels, pts),
                             normalize=False).name)
    seg = sig.segmentation
    outputs.append(write_pbm(out / f"{stem}.feature.pbm", seg.feature_mask).name)
    for name, phi in (("phi1", seg.phi1), ("phi2", seg.phi2)):
        outputs.append(write_field(out / f"{stem}.{name}.field", phi).name)
    if sig.cloud is not None:
        outputs.append(write_points_csv(out / f"{stem}.contour.csv", sig.cloud.points).name)
        contour_rc = np.rint(sig.cloud.points[:, ::-1]).astype(int)
        outputs.append(write_pgm(out / f"{stem}.contour.pgm",
                                 overlay_points(rmap.pixels, contour_rc, arm=0),
                                 normalize=False).name)
    write_rows_csv(out / f"{stem}.energy.csv", ["round", "energy"],
                   [[i, repr(e)] for i, e in enumerate(seg.energy_history)])
    outputs.append(f"{stem}.energy.csv")
    write_manifest(out, "render", cfg, args.seed, outputs, {"status": sig.status})
    print(f"{stem}: {sig.status}, {len(outputs)} files")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twrhar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline configuration JSON")
    common.add_argument("--preset", default="desk", choices=("desk", "full"))
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override, e.g. --set noise.variance=1e-7 (repeatable)")
    common.add_argument("--map-type", choices=("rtm", "dtm"), help="shortcut for --set map_type=...")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="synthesize echo files")
    p.add_argument("--out", default="echoes")
    p.add_argument("--labels", help="comma-separated class labels (default: all)")
    p.add_argument("--count", type=int, default=1, help="samples per label")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr-delta", type=float, default=0.0, help="SNR change in dB (<= 0)")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("maps", parents=[common], help="echo files -> RTM/DTM map files")
    p.add_argument("inputs", nargs="+", help="echo files or directories")
    p.add_argument("--out", default="maps")
    p.set_defaults(func=cmd_maps)

    p = sub.add_parser("templates", parents=[common], help="build a template library")
    p.add_argument("--out", default="library")
    p.add_argument("--per-class", type=int, help="templates per class (default from config)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_templates)

    p = sub.add_parser("classify", parents=[common], help="classify map files against a library")
    p.add_argument("inputs", nargs="+", help="map files or directories")
    p.add_argument("--library", required=True)
    p.add_argument("--out", help="score table CSV")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", parents=[common], help="accuracy and confusion on validation data")
    p.add_argument("--library", required=True)
    p.add_argument("--out", default="run")
    p.add_argument("--seed", type=int, help="dataset seed (default: the library's)")
    p.add_argument("--snr-delta", type=float, default=0.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common], help="accuracy versus SNR reduction")
    p.add_argument("--deltas", default="0,-5,-10", help="comma-separated dB values (<= 0)")
    p.add_argument("--library", help="reuse a library (default: build one)")
    p.add_argument("--out", default="sweep")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("render", parents=[common], help="rasters and CSVs for one sample")
    p.add_argument("--map", help="existing map file (default: synthesize one)")
    p.add_argument("--label", type=int, default=8)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr-delta", type=float, default=0.0)
    p.add_argument("--out", default="render")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # report every failure in machine-readable form
        print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                          "command": args.command}), file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
