"""Command-line interface: barseg features|segment|eval|batch."""

import argparse
import os
import sys

from . import evaluate, features, matio, pipeline


def _load_config_file(path):
    """Read a flat key=value config file (# comments and blanks ignored)."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith(";"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


_INT_KEYS = {"d_c", "subdivision", "max_segment", "seed", "n_fft", "hop", "ae_max_epochs", "ae_batch_size"}


def _build_pipeline_config(args):
    cfg = {}
    if getattr(args, "config", None):
        cfg.update(_load_config_file(args.config))
    overrides = {
        "feature": args.feature,
        "compressor": getattr(args, "compressor", None),
        "d_c": getattr(args, "dc", None),
        "subdivision": args.subdivision,
        "max_segment": getattr(args, "max_segment", None),
        "seed": args.seed,
        "audio_path": getattr(args, "audio", None),
        "downbeats_path": getattr(args, "downbeats", None),
        "annotations_path": getattr(args, "annotations", None),
        "output_dir": getattr(args, "out", None),
        "ae_max_epochs": getattr(args, "ae_max_epochs", None),
    }
    if getattr(args, "tolerances", None):
        cfg["tolerances"] = args.tolerances
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    for key in _INT_KEYS:
        if key in cfg:
            cfg[key] = int(cfg[key])
    if isinstance(cfg.get("tolerances"), str):
        cfg["tolerances"] = tuple(float(t) for t in cfg["tolerances"].split(","))
    return pipeline.PipelineConfig(**cfg)


def _add_common(parser, with_compressor=True):
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--feature", default=None, choices=["chroma", "mel", "lms", "nnlms", "mfcc"])
    parser.add_argument("--subdivision", type=int, default=None, help="frames per bar (default 96)")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default 42)")
    if with_compressor:
        parser.add_argument("--compressor", default=None, choices=list(pipeline.COMPRESSORS))
        parser.add_argument("--dc", type=int, default=None, help="latent dimension")
        parser.add_argument("--dc-sweep", dest="dc_sweep", default=None,
                            help="comma-separated latent dimensions, one run per value")
        parser.add_argument("--max-segment", dest="max_segment", type=int, default=None)
        parser.add_argument("--tolerances", default=None, help='e.g. "0.5,3.0"')
        parser.add_argument("--ae-max-epochs", dest="ae_max_epochs", type=int, default=None)


def cmd_features(args):
    cfg = _build_pipeline_config(args)
    signal = features.load_wav(cfg.audio_path)
    spec = features.compute_feature(signal, cfg.feature, n_fft=cfg.n_fft, hop=cfg.hop)
    out_dir = cfg.output_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(cfg.audio_path))[0]
    csv_path = os.path.join(out_dir, f"{stem}.{cfg.feature}.csv")
    bseg_path = os.path.join(out_dir, f"{stem}.{cfg.feature}.bseg")
    matio.write_csv_matrix(csv_path, spec.values)
    matio.write_bseg(bseg_path, spec.values)
    print(f"{cfg.feature}: {spec.n_bins} bins x {spec.n_frames} frames -> {csv_path}, {bseg_path}")
    return 0


def _print_result(result):
    print(f"{result.song_id}: boundaries (bars) {result.boundaries_bars}")
    for key, row in result.eval_report.items():
        print(
            f"  tol {key}s: P={row['precision']:.3f} R={row['recall']:.3f} F={row['f_measure']:.3f}"
        )


def cmd_segment(args):
    sweep = [int(v) for v in args.dc_sweep.split(",")] if args.dc_sweep else [None]
    status = 0
    for d_c in sweep:
        if d_c is not None:
            args.dc = d_c
        cfg = _build_pipeline_config(args)
        if d_c is not None and cfg.output_dir:
            cfg = pipeline.PipelineConfig(**{**cfg.echo(), "tolerances": tuple(cfg.tolerances),
                                             "output_dir": os.path.join(cfg.output_dir, f"dc{d_c}")})
        result = pipeline.run_song(cfg)
        _print_result(result)
    return status


def cmd_eval(args):
    est = evaluate.load_annotations(args.estimated)
    ref = evaluate.load_annotations(args.reference)
    tolerances = tuple(float(t) for t in (args.tolerances or "0.5,3.0").split(","))
    report = evaluate.evaluate_boundaries(est, ref, tolerances)
    text = matio.dumps_json(report.to_dict())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "eval.json"), "w") as fh:
            fh.write(text)
    print(text, end="")
    return 0


def cmd_batch(args):
    cfg = _build_pipeline_config(args)
    aggregate, results, failures = pipeline.run_batch(args.dataset, cfg)
    for result in results:
        _print_result(result)
    for song, err in failures.items():
        print(f"FAILED {song}: {str(err).splitlines()[0]}", file=sys.stderr)
    print(matio.dumps_json(aggregate), end="")
    return 1 if failures else 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="barseg", description="Barwise compression music structure analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="extract a time-frequency feature from audio")
    p.add_argument("audio")
    p.add_argument("--out", default=None)
    _add_common(p, with_compressor=False)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("segment", help="segment one song")
    p.add_argument("audio")
    p.add_argument("--downbeats", required=True)
    p.add_argument("--annotations", default=None)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="score estimated boundaries against a reference")
    p.add_argument("estimated")
    p.add_argument("reference")
    p.add_argument("--tolerances", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("batch", help="run a dataset directory of songs")
    p.add_argument("dataset")
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_batch)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, pipeline.StageError) as exc:
        print(f"barseg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
