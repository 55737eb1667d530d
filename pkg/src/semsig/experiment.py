"""Experiment sweeps: train per code length, transmit, evaluate, report.

A sweep trains one model per requested code length, uses the training
split's signatures as the knowledge base and the test split as queries,
then scores retrieval sender-side (no channel) and receiver-side after
pushing the query signatures through every configured channel cell.
All numeric table output uses 17 significant digits and derived
sub-seeds, so rerunning the same spec reproduces every byte. Wall-clock
timings go to a separate table that is exempt from that guarantee.
"""

import configparser
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelConfig, transmit_batch
from .data import generate_synthetic, train_test_split_stratified
from .encoder import SemanticHashEncoder
from .retrieval import KnowledgeBase, evaluate_retrieval
from .serialization import load_features, save_model


def _fmt(value):
    """Fixed table formatting: 17 significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _derive_seed(*parts):
    """Deterministic 32-bit sub-seed from integer coordinates."""
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a sweep needs: data source, trainer knobs, channel grid."""

    seed: int = 0
    outdir: str = "out"
    table_format: str = "tsv"
    data_path: str | None = None
    data_format: str = "csv"
    n: int = 600
    d: int = 16
    classes: int = 4
    spread: float = 0.15
    test_fraction: float = 1.0 / 6.0
    code_bits: tuple = (32,)
    anchor_count: int = 1000
    alpha: float = 1.0
    penalty: float = 1e-4
    max_iters: int = 100
    loss_kind: str = "squared"
    proj_lambda: float = 1e-6
    tol: float = 1e-9
    hinge_passes: int = 100
    kernel_width: float | None = None
    channel_kinds: tuple = ("awgn",)
    snr_db: tuple = (10.0,)
    rician_k_db: float = 6.0
    block_fading: bool = False
    radii: tuple = (2,)
    with_map: bool = True

    def __post_init__(self):
        object.__setattr__(self, "code_bits", tuple(int(b) for b in self.code_bits))
        object.__setattr__(self, "channel_kinds", tuple(self.channel_kinds))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "radii", tuple(int(r) for r in self.radii))
        if not self.code_bits:
            raise ValueError("at least one code length is required")
        if not self.channel_kinds or not self.snr_db:
            raise ValueError("at least one channel cell is required")
        if not self.radii:
            raise ValueError("at least one radius is required")
        if self.table_format not in ("tsv", "csv"):
            raise ValueError(f"table_format must be tsv or csv, got {self.table_format!r}")


@dataclass(frozen=True)
class CellResult:
    """Receiver-side outcome of one (bits, channel, snr) sweep cell."""

    bits: int
    kind: str
    snr_db: float
    rician_k_db: float
    cell_seed: int
    status: str
    ber: float | None
    sender: object
    receiver: object
    error: str = ""


@dataclass
class RunArtifacts:
    """Models, traces, and per-cell metrics produced by one sweep."""

    spec: ExperimentSpec
    models: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    cells: list = field(default_factory=list)

    @property
    def failed_cells(self):
        return [cell for cell in self.cells if cell.status != "ok"]


def _parse_list(raw, cast):
    return tuple(cast(part.strip()) for part in str(raw).split(",") if part.strip())


_SPEC_SCHEMA = {
    "experiment": ("seed", "outdir", "format"),
    "dataset": ("kind", "path", "format", "n", "d", "classes", "spread", "test_fraction"),
    "train": (
        "bits", "anchors", "alpha", "penalty", "max_iters", "loss",
        "proj_lambda", "tol", "hinge_passes", "width",
    ),
    "channel": ("kinds", "snr_db", "rician_k_db", "block_fading"),
    "evaluate": ("radii", "map"),
}


def parse_experiment_spec(path=None, overrides=None):
    """Build a spec from a sectioned key = value file plus overrides.

    Overrides are (\"section.key\", value) pairs applied on top of the
    file; a spec can also be built from overrides alone.
    """
    parser = configparser.ConfigParser()
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ValueError(f"cannot read experiment spec {path!r}")
    for key, value in (overrides or {}).items():
        section, _, name = key.partition(".")
        if not name:
            raise ValueError(f"override {key!r} must look like section.key")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, str(value))

    for section in parser.sections():
        if section not in _SPEC_SCHEMA:
            raise ValueError(f"unknown spec section [{section}]")
        for name in parser.options(section):
            if name not in _SPEC_SCHEMA[section]:
                raise ValueError(f"unknown spec key {name!r} in section [{section}]")

    def get(section, name, default=None):
        if parser.has_option(section, name):
            return parser.get(section, name)
        return default

    kwargs = {}
    kwargs["seed"] = int(get("experiment", "seed", 0))
    kwargs["outdir"] = get("experiment", "outdir", "out")
    kwargs["table_format"] = get("experiment", "format", "tsv")

    kind = get("dataset", "kind", "synthetic")
    if kind == "file":
        path_value = get("dataset", "path")
        if not path_value:
            raise ValueError("dataset kind 'file' requires a path")
        kwargs["data_path"] = path_value
        kwargs["data_format"] = get("dataset", "format", "csv")
    elif kind != "synthetic":
        raise ValueError(f"dataset kind must be synthetic or file, got {kind!r}")
    kwargs["n"] = int(get("dataset", "n", 600))
    kwargs["d"] = int(get("dataset", "d", 16))
    kwargs["classes"] = int(get("dataset", "classes", 4))
    kwargs["spread"] = float(get("dataset", "spread", 0.15))
    kwargs["test_fraction"] = float(get("dataset", "test_fraction", 1.0 / 6.0))

    kwargs["code_bits"] = _parse_list(get("train", "bits", "32"), int)
    kwargs["anchor_count"] = int(get("train", "anchors", 1000))
    kwargs["alpha"] = float(get("train", "alpha", 1.0))
    kwargs["penalty"] = float(get("train", "penalty", 1e-4))
    kwargs["max_iters"] = int(get("train", "max_iters", 100))
    kwargs["loss_kind"] = get("train", "loss", "squared")
    kwargs["proj_lambda"] = float(get("train", "proj_lambda", 1e-6))
    kwargs["tol"] = float(get("train", "tol", 1e-9))
    kwargs["hinge_passes"] = int(get("train", "hinge_passes", 100))
    width = get("train", "width")
    kwargs["kernel_width"] = float(width) if width is not None else None

    kwargs["channel_kinds"] = _parse_list(get("channel", "kinds", "awgn"), str)
    kwargs["snr_db"] = _parse_list(get("channel", "snr_db", "10"), float)
    kwargs["rician_k_db"] = float(get("channel", "rician_k_db", 6.0))
    kwargs["block_fading"] = str(get("channel", "block_fading", "false")).lower() in (
        "1", "true", "yes", "on",
    )

    kwargs["radii"] = _parse_list(get("evaluate", "radii", "2"), int)
    kwargs["with_map"] = str(get("evaluate", "map", "true")).lower() in (
        "1", "true", "yes", "on",
    )
    return ExperimentSpec(**kwargs)


def _load_dataset(spec):
    if spec.data_path is not None:
        X, y, _ = load_features(spec.data_path, format=spec.data_format)
        return X, y
    return generate_synthetic(
        spec.n, spec.d, spec.classes, spec.spread, _derive_seed(spec.seed, 0)
    )


def _summary_columns(spec):
    cols = [
        "bits", "channel", "snr_db", "rician_k_db", "cell_seed", "status",
        "ber", "n_queries",
    ]
    for r in spec.radii:
        cols.append(f"sender_precision_r{r}")
        cols.append(f"receiver_precision_r{r}")
    cols += ["sender_map", "receiver_map", "sender_map_excluded", "receiver_map_excluded"]
    for r in spec.radii:
        cols.append(f"sender_empty_r{r}")
        cols.append(f"receiver_empty_r{r}")
    cols.append("error")
    return cols


def _cell_row(spec, cell):
    row = {
        "bits": cell.bits,
        "channel": cell.kind,
        "snr_db": cell.snr_db,
        "rician_k_db": cell.rician_k_db if cell.kind == "rician" else "",
        "cell_seed": cell.cell_seed,
        "status": cell.status,
        "ber": cell.ber,
        "n_queries": cell.sender.n_queries if cell.sender else "",
        "error": cell.error,
    }
    for r in spec.radii:
        row[f"sender_precision_r{r}"] = cell.sender.precision_at_r[r] if cell.sender else ""
        row[f"receiver_precision_r{r}"] = cell.receiver.precision_at_r[r] if cell.receiver else ""
        row[f"sender_empty_r{r}"] = cell.sender.empty_return_count[r] if cell.sender else ""
        row[f"receiver_empty_r{r}"] = cell.receiver.empty_return_count[r] if cell.receiver else ""
    row["sender_map"] = cell.sender.map_score if cell.sender else ""
    row["receiver_map"] = cell.receiver.map_score if cell.receiver else ""
    row["sender_map_excluded"] = cell.sender.map_excluded_count if cell.sender else ""
    row["receiver_map_excluded"] = cell.receiver.map_excluded_count if cell.receiver else ""
    return row


def _write_table(path, columns, rows, sep, comment=None):
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(sep.join(columns) + "\n")
        for row in rows:
            fh.write(sep.join(_fmt(row.get(col, "")) for col in columns) + "\n")


def run_experiment(spec):
    """Run the full sweep and write artifacts under spec.outdir.

    A failing cell is recorded with its error and does not stop the other
    cells. Returns the in-memory artifacts.
    """
    os.makedirs(spec.outdir, exist_ok=True)
    X, y = _load_dataset(spec)
    X_train, y_train, X_test, y_test = train_test_split_stratified(
        X, y, test_fraction=spec.test_fraction, seed=_derive_seed(spec.seed, 1)
    )

    artifacts = RunArtifacts(spec=spec)
    timings = []
    for b_idx, bits in enumerate(spec.code_bits):
        t0 = time.perf_counter()
        encoder = SemanticHashEncoder(
            code_bits=bits,
            anchor_count=spec.anchor_count,
            alpha=spec.alpha,
            penalty=spec.penalty,
            max_iters=spec.max_iters,
            loss_kind=spec.loss_kind,
            proj_lambda=spec.proj_lambda,
            tol=spec.tol,
            hinge_passes=spec.hinge_passes,
            kernel_width=spec.kernel_width,
            seed=_derive_seed(spec.seed, 2, b_idx),
        )
        encoder.fit(X_train, y_train)
        train_seconds = time.perf_counter() - t0
        timings.append({"bits": bits, "stage": "train", "seconds": train_seconds})

        kb = KnowledgeBase(encoder.codes_, y_train)
        query_codes = encoder.transform(X_test)
        sender = evaluate_retrieval(
            query_codes, y_test, kb, spec.radii, with_map=spec.with_map
        )
        artifacts.models[bits] = encoder.model_
        artifacts.traces[bits] = encoder.trace_
        save_model(
            os.path.join(spec.outdir, f"model_b{bits}.semsig"), encoder.model_, kb=kb
        )

        for ch_idx, kind in enumerate(spec.channel_kinds):
            for snr_idx, snr in enumerate(spec.snr_db):
                cell_seed = _derive_seed(spec.seed, 3, b_idx, ch_idx, snr_idx)
                t1 = time.perf_counter()
                try:
                    channel = ChannelConfig(
                        kind=kind,
                        snr_db=snr,
                        rician_k_db=spec.rician_k_db,
                        seed=cell_seed,
                        block_fading=spec.block_fading,
                    )
                    received, report = transmit_batch(query_codes, channel)
                    receiver = evaluate_retrieval(
                        received, y_test, kb, spec.radii, with_map=spec.with_map
                    )
                    cell = CellResult(
                        bits=bits,
                        kind=kind,
                        snr_db=snr,
                        rician_k_db=spec.rician_k_db,
                        cell_seed=cell_seed,
                        status="ok",
                        ber=report.ber,
                        sender=sender,
                        receiver=receiver,
                    )
                except Exception as exc:  # cell failures must not kill the sweep
                    cell = CellResult(
                        bits=bits,
                        kind=kind,
                        snr_db=snr,
                        rician_k_db=spec.rician_k_db,
                        cell_seed=cell_seed,
                        status="error",
                        ber=None,
                        sender=sender,
                        receiver=None,
                        error=str(exc).replace("\n", " "),
                    )
                artifacts.cells.append(cell)
                timings.append(
                    {
                        "bits": bits,
                        "stage": f"cell_{kind}_{_fmt(snr)}",
                        "seconds": time.perf_counter() - t1,
                    }
                )

    sep = "\t" if spec.table_format == "tsv" else ","
    ext = spec.table_format
    _write_table(
        os.path.join(spec.outdir, f"summary.{ext}"),
        _summary_columns(spec),
        [_cell_row(spec, cell) for cell in artifacts.cells],
        sep,
        comment="one row per sweep cell; sender columns repeat per cell by design",
    )
    trace_rows = []
    for bits in spec.code_bits:
        for rec in artifacts.traces[bits].records:
            trace_rows.append(
                {
                    "bits": bits,
                    "iteration": rec.iteration,
                    "objective_after_w": rec.objective_after_w,
                    "objective_after_q": rec.objective_after_q,
                    "objective": rec.objective,
                    "bits_flipped": rec.bits_flipped,
                    "status": artifacts.traces[bits].status,
                }
            )
    _write_table(
        os.path.join(spec.outdir, f"trace.{ext}"),
        ["bits", "iteration", "objective_after_w", "objective_after_q", "objective",
         "bits_flipped", "status"],
        trace_rows,
        sep,
        comment="objective after each sub-step, per outer iteration",
    )
    _write_table(
        os.path.join(spec.outdir, f"timing.{ext}"),
        ["bits", "stage", "seconds"],
        timings,
        sep,
        comment="wall-clock seconds; not covered by the byte-determinism guarantee",
    )
    return artifacts


def _family_tables(spec, cells, trace_rows):
    """Derive the per-figure-family tables from summary-level rows."""
    radii = spec.radii
    prec_bits, map_bits, prec_snr, map_snr = [], [], [], []
    for cell in cells:
        if cell.status != "ok":
            continue
        for side, metrics in (("sender", cell.sender), ("receiver", cell.receiver)):
            for r in radii:
                entry = {
                    "bits": cell.bits,
                    "channel": cell.kind,
                    "snr_db": cell.snr_db,
                    "side": side,
                    "radius": r,
                    "precision": metrics.precision_at_r[r],
                }
                prec_bits.append(entry)
                prec_snr.append(entry)
            entry = {
                "bits": cell.bits,
                "channel": cell.kind,
                "snr_db": cell.snr_db,
                "side": side,
                "map": metrics.map_score,
            }
            map_bits.append(entry)
            map_snr.append(entry)
    order_bits = ["bits", "channel", "snr_db", "side"]
    order_snr = ["channel", "snr_db", "bits", "side"]
    return (
        ("precision_vs_bits", order_bits + ["radius", "precision"], prec_bits,
         "within-radius precision against code length"),
        ("map_vs_bits", order_bits + ["map"], map_bits,
         "mean average precision against code length"),
        ("precision_vs_snr", order_snr + ["radius", "precision"], prec_snr,
         "within-radius precision against channel quality"),
        ("map_vs_snr", order_snr + ["map"], map_snr,
         "mean average precision against channel quality"),
        ("loss_vs_iteration",
         ["bits", "iteration", "objective_after_w", "objective_after_q", "objective",
          "bits_flipped"],
         trace_rows, "training objective per iteration"),
    )


def emit_report(artifacts, table_format=None, outdir=None):
    """Write one plottable table per figure family; returns the paths."""
    spec = artifacts.spec
    fmt = table_format or spec.table_format
    if fmt not in ("tsv", "csv"):
        raise ValueError(f"table format must be tsv or csv, got {fmt!r}")
    directory = outdir or spec.outdir
    os.makedirs(directory, exist_ok=True)
    sep = "\t" if fmt == "tsv" else ","

    trace_rows = []
    for bits in spec.code_bits:
        trace = artifacts.traces.get(bits)
        if trace is None:
            continue
        for rec in trace.records:
            trace_rows.append(
                {
                    "bits": bits,
                    "iteration": rec.iteration,
                    "objective_after_w": rec.objective_after_w,
                    "objective_after_q": rec.objective_after_q,
                    "objective": rec.objective,
                    "bits_flipped": rec.bits_flipped,
                }
            )
    paths = []
    for name, columns, rows, comment in _family_tables(spec, artifacts.cells, trace_rows):
        path = os.path.join(directory, f"{name}.{fmt}")
        _write_table(path, columns, rows, sep, comment=comment)
        paths.append(path)
    return paths


def _read_table(path, sep):
    columns, rows = None, []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cells = line.split(sep)
            if columns is None:
                columns = cells
            else:
                rows.append(dict(zip(columns, cells)))
    if columns is None:
        raise ValueError(f"{path}: empty table")
    return columns, rows


def emit_report_from_dir(directory, table_format=None):
    """Regenerate the figure-family tables from a sweep's saved tables.

    Values are copied through as written, so the output is byte-stable
    across repeated invocations.
    """
    fmt = table_format
    if fmt is None:
        fmt = "tsv" if os.path.exists(os.path.join(directory, "summary.tsv")) else "csv"
    sep = "\t" if fmt == "tsv" else ","
    summary_path = os.path.join(directory, f"summary.{fmt}")
    if not os.path.exists(summary_path):
        raise ValueError(f"no summary table found under {directory!r}")
    columns, rows = _read_table(summary_path, sep)
    radii = sorted(
        int(col[len("sender_precision_r"):])
        for col in columns
        if col.startswith("sender_precision_r")
    )

    prec_bits, map_bits, prec_snr, map_snr = [], [], [], []
    for row in rows:
        if row.get("status") != "ok":
            continue
        for side in ("sender", "receiver"):
            for r in radii:
                entry = {
                    "bits": row["bits"],
                    "channel": row["channel"],
                    "snr_db": row["snr_db"],
                    "side": side,
                    "radius": r,
                    "precision": row[f"{side}_precision_r{r}"],
                }
                prec_bits.append(entry)
                prec_snr.append(entry)
            entry = {
                "bits": row["bits"],
                "channel": row["channel"],
                "snr_db": row["snr_db"],
                "side": side,
                "map": row[f"{side}_map"],
            }
            map_bits.append(entry)
            map_snr.append(entry)

    trace_path = os.path.join(directory, f"trace.{fmt}")
    trace_rows = []
    if os.path.exists(trace_path):
        _, trace_rows = _read_table(trace_path, sep)

    order_bits = ["bits", "channel", "snr_db", "side"]
    order_snr = ["channel", "snr_db", "bits", "side"]
    tables = (
        ("precision_vs_bits", order_bits + ["radius", "precision"], prec_bits,
         "within-radius precision against code length"),
        ("map_vs_bits", order_bits + ["map"], map_bits,
         "mean average precision against code length"),
        ("precision_vs_snr", order_snr + ["radius", "precision"], prec_snr,
         "within-radius precision against channel quality"),
        ("map_vs_snr", order_snr + ["map"], map_snr,
         "mean average precision against channel quality"),
        ("loss_vs_iteration",
         ["bits", "iteration", "objective_after_w", "objective_after_q", "objective",
          "bits_flipped"],
         trace_rows, "training objective per iteration"),
    )
    paths = []
    for name, cols, rows_out, comment in tables:
        path = os.path.join(directory, f"{name}.{fmt}")
        _write_table(path, cols, rows_out, sep, comment=comment)
        paths.append(path)
    return paths
