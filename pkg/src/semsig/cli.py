"""Command-line front end.

Subcommands: train, encode, transmit, evaluate, sweep, report. All
diagnostics go to standard error; data lands in files only. Exit code 0
means full success, 1 means a runtime failure (including any failed
sweep cell), 2 means the arguments or spec were invalid.
"""

import argparse
import logging
import sys

import numpy as np

from .adapt import DahConfig, adapt, dah_objective
from .channel import ChannelConfig, transmit_batch
from .data import generate_synthetic
from .encoder import SemanticHashEncoder, encode
from .experiment import emit_report_from_dir, parse_experiment_spec, run_experiment
from .retrieval import KnowledgeBase, evaluate_retrieval
from .serialization import (
    MODEL_MAGIC,
    load_features,
    load_kb_text,
    load_model,
    load_signatures_text,
    save_kb_text,
    save_model,
    save_signatures_text,
)

log = logging.getLogger("semsig")


def _add_dataset_args(parser):
    parser.add_argument("--data", help="dataset file; csv rows are label,feature,...")
    parser.add_argument(
        "--data-format", default="csv", choices=["csv", "packed"], help="dataset file format"
    )
    parser.add_argument(
        "--synthetic",
        metavar="N,D,K,SPREAD",
        help="generate clustered data instead of reading a file",
    )
    parser.add_argument("--data-seed", type=int, default=0, help="seed for --synthetic")


def _add_channel_args(parser):
    parser.add_argument(
        "--channel", default="awgn", choices=["awgn", "rayleigh", "rician"],
        help="channel kind",
    )
    parser.add_argument("--snr-db", type=float, default=10.0, help="per-bit SNR in dB")
    parser.add_argument(
        "--rician-k-db", type=float, default=0.0,
        help="line-of-sight to scatter ratio in dB (rician only)",
    )
    parser.add_argument("--seed", type=int, default=0, help="channel noise seed")
    parser.add_argument(
        "--block-fading", action="store_true",
        help="draw one fading coefficient per signature instead of per bit",
    )


def _load_dataset(args):
    if args.synthetic:
        parts = args.synthetic.split(",")
        if len(parts) != 4:
            raise ValueError("--synthetic expects N,D,K,SPREAD")
        n, d, k = (int(p) for p in parts[:3])
        return generate_synthetic(n, d, k, float(parts[3]), args.data_seed)
    if not args.data:
        raise ValueError("provide --data or --synthetic")
    X, y, _ = load_features(args.data, format=args.data_format)
    return X, y


def _load_kb(path):
    """Knowledge base from a signature text file or a model container."""
    with open(path, "rb") as fh:
        is_container = fh.read(len(MODEL_MAGIC)) == MODEL_MAGIC
    if not is_container:
        return load_kb_text(path)
    _, kb = load_model(path, with_kb=True)
    if kb is None:
        raise ValueError(f"{path}: model container has no embedded knowledge base")
    return kb


def _cmd_train(args):
    X, y = _load_dataset(args)
    encoder = SemanticHashEncoder(
        code_bits=args.bits,
        anchor_count=args.anchors,
        alpha=args.alpha,
        penalty=args.penalty,
        max_iters=args.max_iters,
        loss_kind=args.loss,
        proj_lambda=args.proj_lambda,
        tol=args.tol,
        hinge_passes=args.hinge_passes,
        kernel_width=args.width,
        seed=args.seed,
    )
    encoder.fit(X, y)
    trace = encoder.trace_
    log.info(
        "trained %d-bit model on %d samples: %s after %d iterations",
        args.bits, X.shape[0], trace.status, trace.iterations,
    )
    model = encoder.model_
    kb_codes = encoder.codes_

    if args.adapt_data:
        Xr, _, _ = load_features(args.adapt_data, format=args.adapt_format)
        dah = DahConfig(
            eta=args.eta,
            gamma=args.gamma,
            bandwidth_multipliers=tuple(float(v) for v in args.bandwidths.split(",")),
            max_adapt_iters=args.adapt_iters,
            confidence=args.confidence,
            vote_radius=args.vote_radius,
        )
        before = dah_objective(model, X, y, Xr, dah)
        model, report = adapt(model, X, y, Xr, dah)
        log.info(
            "adaptation %s: joint objective %.6g -> %.6g",
            "accepted" if report.adapted else "unchanged",
            before.j_value, report.j_value,
        )
        if report.adapted:
            kb_codes = encode(model, X)

    kb = KnowledgeBase(kb_codes, y) if (args.embed_kb or args.kb_text) else None
    save_model(args.out, model, kb=kb if args.embed_kb else None)
    log.info("wrote model to %s", args.out)
    if args.kb_text:
        save_kb_text(args.kb_text, kb)
        log.info("wrote knowledge base text to %s", args.kb_text)
    return 0


def _cmd_encode(args):
    model = load_model(args.model)
    X, y = _load_dataset(args)
    codes = encode(model, X)
    save_signatures_text(args.out, codes, y)
    log.info("encoded %d signatures of %d bits to %s", codes.shape[0], codes.shape[1], args.out)
    return 0


def _cmd_transmit(args):
    codes, labels, ids = load_signatures_text(args.infile)
    config = ChannelConfig(
        kind=args.channel,
        snr_db=args.snr_db,
        rician_k_db=args.rician_k_db,
        seed=args.seed,
        block_fading=args.block_fading,
    )
    received, report = transmit_batch(codes.astype(np.float64), config)
    save_signatures_text(args.out, received, labels, ids=ids)
    log.info(
        "transmitted %d signatures over %s at %g dB: %d of %d bits flipped (ber %.3g)",
        codes.shape[0], args.channel, args.snr_db, report.flipped,
        codes.size, report.ber,
    )
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write("channel\tsnr_db\tbits\tflipped\tber\n")
            fh.write(
                f"{args.channel}\t{args.snr_db:.17g}\t{codes.size}\t"
                f"{report.flipped}\t{report.ber:.17g}\n"
            )
    return 0


def _cmd_evaluate(args):
    kb = _load_kb(args.kb)
    codes, labels, ids = load_signatures_text(args.queries)
    radii = [int(r) for r in args.radius.split(",")]
    report = evaluate_retrieval(
        codes.astype(np.float64),
        labels,
        kb,
        radii,
        query_ids=ids if args.exclude_self else None,
        with_map=not args.no_map,
    )
    lines = [("n_queries", str(report.n_queries))]
    for r in radii:
        lines.append((f"precision_r{r}", "%.17g" % report.precision_at_r[r]))
        lines.append((f"empty_returns_r{r}", str(report.empty_return_count[r])))
    if report.map_score is not None:
        lines.append(("map", "%.17g" % report.map_score))
        lines.append(("map_excluded", str(report.map_excluded_count)))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("metric\tvalue\n")
        for key, value in lines:
            fh.write(f"{key}\t{value}\n")
    log.info("evaluated %d queries against %d stored items", report.n_queries, len(kb))
    return 0


def _cmd_sweep(args):
    overrides = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects section.key=value, got {item!r}")
        overrides[key.strip()] = value.strip()
    if args.outdir:
        overrides["experiment.outdir"] = args.outdir
    spec = parse_experiment_spec(args.spec, overrides)
    artifacts = run_experiment(spec)
    failed = artifacts.failed_cells
    for cell in failed:
        log.error(
            "cell bits=%d channel=%s snr=%g failed: %s",
            cell.bits, cell.kind, cell.snr_db, cell.error,
        )
    log.info(
        "sweep finished: %d cells, %d failed; artifacts under %s",
        len(artifacts.cells), len(failed), spec.outdir,
    )
    return 1 if failed else 0


def _cmd_report(args):
    paths = emit_report_from_dir(args.artifacts, table_format=args.format)
    for path in paths:
        log.info("wrote %s", path)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="semsig",
        description="Learn binary semantic signatures, send them through noisy "
        "channels, and evaluate Hamming-radius retrieval.",
    )
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a signature model")
    _add_dataset_args(p)
    p.add_argument("--bits", type=int, default=32, help="signature length")
    p.add_argument("--anchors", type=int, default=1000, help="anchor count cap")
    p.add_argument("--alpha", type=float, default=1.0, help="classifier ridge weight")
    p.add_argument("--penalty", type=float, default=1e-4, help="code-fit coupling weight")
    p.add_argument("--max-iters", type=int, default=100, help="outer iteration cap")
    p.add_argument("--loss", default="squared", choices=["squared", "hinge"])
    p.add_argument("--proj-lambda", type=float, default=1e-6, help="projection ridge term")
    p.add_argument("--tol", type=float, default=1e-9, help="objective stall threshold")
    p.add_argument("--hinge-passes", type=int, default=100, help="hinge solver sweeps")
    p.add_argument("--width", type=float, help="kernel width override")
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.add_argument("--out", required=True, help="model container output path")
    p.add_argument("--embed-kb", action="store_true", help="store training signatures in the container")
    p.add_argument("--kb-text", help="also write the knowledge base as text")
    p.add_argument("--adapt-data", help="receiver-side feature file to adapt against")
    p.add_argument("--adapt-format", default="csv", choices=["csv", "packed"])
    p.add_argument("--eta", type=float, default=1.0, help="entropy term weight")
    p.add_argument("--gamma", type=float, default=1.0, help="discrepancy term weight")
    p.add_argument(
        "--bandwidths", default="0.25,0.5,1,2,4",
        help="kernel width multipliers for the discrepancy term",
    )
    p.add_argument("--confidence", type=float, default=0.8, help="pseudo-label gate")
    p.add_argument("--adapt-iters", type=int, default=5, help="adaptation iteration cap")
    p.add_argument("--vote-radius", type=int, default=2, help="pseudo-label vote radius")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("encode", help="signatures for a dataset under a trained model")
    _add_dataset_args(p)
    p.add_argument("--model", required=True, help="model container")
    p.add_argument("--out", required=True, help="signature text output")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("transmit", help="corrupt stored signatures with channel noise")
    p.add_argument("--in", dest="infile", required=True, help="signature text input")
    p.add_argument("--out", required=True, help="received signature text output")
    p.add_argument("--report", help="optional error-rate table output")
    _add_channel_args(p)
    p.set_defaults(func=_cmd_transmit)

    p = sub.add_parser("evaluate", help="score signatures against a knowledge base")
    p.add_argument("--kb", required=True, help="knowledge base: text file or model container")
    p.add_argument("--queries", required=True, help="query signature text file")
    p.add_argument("--radius", default="2", help="comma-separated Hamming radii")
    p.add_argument("--no-map", action="store_true", help="skip the ranking metric")
    p.add_argument(
        "--exclude-self", action="store_true",
        help="ignore base items whose id equals the query id",
    )
    p.add_argument("--out", required=True, help="metrics table output")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run a full experiment spec")
    p.add_argument("--spec", required=True, help="experiment spec file")
    p.add_argument("--outdir", help="override the spec output directory")
    p.add_argument(
        "--set", action="append", metavar="SECTION.KEY=VALUE",
        help="override a spec value; repeatable",
    )
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="rebuild plottable tables from sweep artifacts")
    p.add_argument("--artifacts", required=True, help="sweep output directory")
    p.add_argument("--format", choices=["tsv", "csv"], help="table format override")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        force=True,
    )
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        log.error("missing file: %s", exc)
        return 2
    except ValueError as exc:
        log.error("%s", exc)
        return 2
    except (OSError, RuntimeError, np.linalg.LinAlgError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
