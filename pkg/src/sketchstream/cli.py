"""Command line interface: generate, bootstrap, stream."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .engine import (
    RunConfig,
    load_labels_file,
    load_model,
    report_text,
    run_bootstrap,
    run_stream,
)
from .generator import GeneratorConfig, generate_dataset, write_labels
from .records import ParseError, write_stream


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated int list")
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchstream",
        description="Streaming anomaly detection over typed, timestamped edge streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic labeled edge stream")
    gen.add_argument("--classes", type=int, default=2, help="number of behavior classes")
    gen.add_argument("--graphs-per-class", type=int, default=50)
    gen.add_argument("--anomaly-fraction", type=float, default=0.05)
    gen.add_argument("--avg-nodes", type=int, default=100)
    gen.add_argument("--avg-edges", type=int, default=600)
    gen.add_argument("--node-alphabet", default=None, help="node type symbols (default a-z)")
    gen.add_argument("--edge-alphabet", default=None, help="edge type symbols (default A-Z)")
    gen.add_argument("-B", "--interleave-width", type=int, default=10,
                     help="graphs evolving simultaneously")
    gen.add_argument("--separation", type=float, default=0.8)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True, help="test stream TSV path")
    gen.add_argument("--labels-out", required=True, help="sidecar labels TSV path")
    gen.add_argument("--train-out", default=None,
                     help="also write a training stream of held-out benign graphs")
    gen.add_argument("--train-fraction", type=float, default=0.75,
                     help="benign fraction held out for training (with --train-out)")

    boot = sub.add_parser("bootstrap", help="cluster a training stream into a model")
    boot.add_argument("-i", "--input", required=True, help="training stream TSV")
    boot.add_argument("--model-out", required=True)
    boot.add_argument("--hops", type=int, default=1)
    boot.add_argument("-L", "--sketch-bits", type=int, default=1000)
    boot.add_argument("--chunk-lengths", type=_int_list, default=(4, 8, 16, 32),
                      help="candidate chunk lengths, comma separated")
    boot.add_argument("--cluster-counts", type=_int_list, default=(2, 3, 4, 5),
                      help="candidate cluster counts, comma separated")
    boot.add_argument("--seed", type=int, required=True, help="clustering seed")
    boot.add_argument("--family-seed", type=int, required=True, help="hash family seed")

    stream = sub.add_parser("stream", help="run streaming detection against a model")
    stream.add_argument("--model", required=True)
    stream.add_argument("-i", "--input", required=True, help="test stream TSV")
    stream.add_argument("--labels", default=None, help="labels TSV for AP/AUC columns")
    stream.add_argument("--csv-out", required=True, help="snapshot CSV path")
    stream.add_argument("-E", "--snapshot-interval", type=int, default=10_000)
    stream.add_argument("-N", "--max-edges", type=int, default=None,
                        help="resident edge cap (default unlimited)")
    stream.add_argument("--max-tracked-graphs", type=int, default=None,
                        help="cap on graphs with detection state (default unlimited)")
    return parser


def _cmd_generate(args: argparse.Namespace) -> int:
    kwargs = dict(
        num_behavior_classes=args.classes,
        graphs_per_class=args.graphs_per_class,
        anomaly_fraction=args.anomaly_fraction,
        avg_nodes=args.avg_nodes,
        avg_edges=args.avg_edges,
        interleave_width=args.interleave_width,
        separation=args.separation,
        seed=args.seed,
    )
    if args.node_alphabet is not None:
        kwargs["node_type_alphabet"] = args.node_alphabet
    if args.edge_alphabet is not None:
        kwargs["edge_type_alphabet"] = args.edge_alphabet
    config = GeneratorConfig(**kwargs)
    train_fraction = args.train_fraction if args.train_out else 0.0
    dataset = generate_dataset(config, train_fraction=train_fraction)
    with open(args.out, "w", encoding="ascii") as fp:
        count = write_stream(dataset.test, fp)
    with open(args.labels_out, "w", encoding="ascii") as fp:
        write_labels(dataset.labels, fp)
    if args.train_out:
        with open(args.train_out, "w", encoding="ascii") as fp:
            train_count = write_stream(dataset.train, fp)
        print(f"wrote {train_count} training edges ({len(dataset.train_ids)} graphs)")
    print(f"wrote {count} test edges ({len(dataset.labels) - len(dataset.train_ids)} graphs)")
    return 0


def _cmd_bootstrap(args: argparse.Namespace) -> int:
    config = RunConfig(
        hops=args.hops,
        sketch_bits=args.sketch_bits,
        candidate_chunk_lengths=args.chunk_lengths,
        candidate_cluster_counts=args.cluster_counts,
        cluster_seed=args.seed,
        family_seed=args.family_seed,
    )
    _, report = run_bootstrap(args.input, config, model_path=args.model_out)
    sys.stdout.write(report_text(report))
    print(f"model written to {args.model_out}")
    return 0


def _cmd_stream(args: argparse.Namespace) -> int:
    config = RunConfig(
        snapshot_interval=args.snapshot_interval,
        max_edges=args.max_edges,
        max_tracked_graphs=args.max_tracked_graphs,
    )
    with open(args.model, "r", encoding="ascii") as fp:
        model = load_model(fp)
    labels = load_labels_file(args.labels) if args.labels else None
    with open(args.csv_out, "w", encoding="ascii") as csv_fp:
        result = run_stream(model, args.input, config, labels=labels, csv_fp=csv_fp)
    print(
        f"processed {result.edges_processed} edges in {result.elapsed_seconds:.2f}s "
        f"({result.edges_per_second:.0f} edges/sec), peak resident edges {result.peak_edges}"
    )
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "generate": _cmd_generate,
        "bootstrap": _cmd_bootstrap,
        "stream": _cmd_stream,
    }
    try:
        return handlers[args.command](args)
    except (ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
