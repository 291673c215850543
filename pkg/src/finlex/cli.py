"""Command-line entry point: ``finlex <stage> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import pandas as pd

from . import __version__
from .adapt import AdaptationConfig, adapt_add, adapt_re, calibrate_theta, threshold, union_lexicons
from .analysis import neighbor_report, overlap_matrix, size_table
from .config import ConfigError, dump_config, load_config, require_input
from .corpus import filter_corpus, read_corpus, write_corpus
from .embeddings import EmbeddingModel, TrainConfig, train_cbow
from .finvars import (
    FACTOR_COLUMNS,
    FUNDAMENTAL_COLUMNS,
    INDEX_COLUMNS,
    MARKET_COLUMNS,
    build_controls,
    build_finvars_panel,
    read_dated_csv,
)
from .lexicon import SentimentLexicon, read_lexicon, read_wordlist, write_lexicon
from .manifest import write_manifest
from .panelreg import fit_panel, report, results_json
from .textvars import ID_COLUMNS, build_text_panel, write_text_panel

log = logging.getLogger("finlex")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
BUNDLED_PANEL = Path(__file__).parent / "data" / "synthetic_panel.csv"


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"{stage}: {type(exc).__name__}: {exc}")
        self.stage = stage


class Context:
    """Resolved config, output directory and run flags shared by all stages."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config(args.config)
        if args.seed is not None:
            self.config["seed"] = args.seed
        self.deterministic = args.deterministic
        if self.deterministic:
            self.config["embeddings"]["workers"] = 1
            os.environ["FINLEX_THREADS"] = "1"
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.argv = list(getattr(args, "argv", []))

    @property
    def seed(self) -> int:
        return int(self.config["seed"])

    def path(self, *parts: str) -> Path:
        p = self.out.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def manifest(self, stage: str, inputs, artifacts) -> None:
        write_manifest(self.out, stage, self.config, self.seed, inputs, artifacts, self.argv)

    def adapt_config(self) -> AdaptationConfig:
        a = self.config["adapt"]
        return AdaptationConfig(theta=a["theta"], k_folds=a["k_folds"], seed=self.seed, C=a["C"],
                                normalize=a["normalize"])


# -- stages --------------------------------------------------------------------

def stage_ingest(ctx: Context, input_path: str | None = None) -> Path:
    src = Path(input_path) if input_path else require_input(ctx.config, "corpus")
    c = ctx.config["corpus"]
    docs = read_corpus(src, workers=c["workers"])
    kept = filter_corpus(docs, min_tokens=c["min_tokens"])
    log.info("ingest: kept %d of %d documents (min_tokens=%d)", len(kept), len(docs), c["min_tokens"])
    if not kept:
        raise ValueError(f"no document has >= {c['min_tokens']} tokens")
    out = ctx.path("corpus.jsonl")
    write_corpus(kept, out)
    ctx.manifest("ingest", [src], [out])
    return out


def stage_embeddings(ctx: Context, corpus_path: str | None = None) -> Path:
    src = Path(corpus_path) if corpus_path else ctx.path("corpus.jsonl")
    docs = read_corpus(src)
    e = ctx.config["embeddings"]
    cfg = TrainConfig(dim=e["dim"], window=e["window"], min_count=e["min_count"], epochs=e["epochs"],
                      initial_lr=e["initial_lr"], subsample_threshold=e["subsample_threshold"],
                      seed=ctx.seed, workers=e["workers"])
    model = train_cbow(docs, cfg)
    log.info("embeddings: %d words x %d dims", len(model.vocab), model.dim)
    npz, txt = ctx.path("embeddings.npz"), ctx.path("embeddings.txt")
    model.save(npz)
    model.save_text(txt)
    ctx.manifest("train-embeddings", [src], [npz, txt])
    return npz


def _load_model(ctx: Context, path: str | None) -> tuple[EmbeddingModel, Path]:
    p = Path(path) if path else ctx.path("embeddings.npz")
    if not p.exists():
        raise FileNotFoundError(f"embedding model {p} not found (run train-embeddings first)")
    return (EmbeddingModel.load(p) if p.suffix == ".npz" else EmbeddingModel.load_text(p)), p


def _manual_lexicons(ctx: Context) -> list[SentimentLexicon]:
    specs = ctx.config["inputs"]["lm_lexicons"]
    if not specs:
        raise ConfigError("inputs.lm_lexicons is empty")
    return [read_lexicon(s["path"], name=name, category=s["category"]) for name, s in specs.items()]


def _stem(name: str) -> str:
    return name[:-3] if name.endswith("_lm") else name


def _union_name(a: str, b: str) -> str:
    """``neg_RE`` + ``neg_ADD`` -> ``neg_RE+ADD``; otherwise plain ``a+b``."""
    pa, _, sa = a.rpartition("_")
    pb, _, sb = b.rpartition("_")
    return f"{pa}_{sa}+{sb}" if pa and pa == pb else f"{a}+{b}"


def _write_adapted(ctx: Context, lex: SentimentLexicon) -> list[Path]:
    path = ctx.path("lexicons", f"{lex.name}.txt")
    write_lexicon(lex, path)
    out = [path, path.with_name(f"{lex.name}.meta.json")]
    if "probabilities" in lex.meta:
        audit = {"probabilities": lex.meta["probabilities"], "audit": lex.meta.get("audit")}
        ap = path.with_name(f"{lex.name}.audit.json")
        ap.write_text(json.dumps(audit, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        out.append(ap)
    return out


def _maybe_calibrate(ctx: Context, lex: SentimentLexicon) -> SentimentLexicon:
    target = ctx.config["adapt"]["target_proportion"]
    if target is None:
        return lex
    docs = read_corpus(ctx.path("corpus.jsonl"))
    theta = calibrate_theta(lex.meta["probabilities"], docs, target)
    log.info("%s: theta calibrated to %.2f for target proportion %g", lex.name, theta, target)
    return threshold(lex, theta)


def stage_adapt(ctx: Context, method: str, embeddings: str | None = None, only: list[str] | None = None,
                union_inputs: list[str] | None = None, name: str | None = None) -> list[Path]:
    artifacts: list[Path] = []
    inputs: list[Path] = []
    if method == "union":
        if not union_inputs or len(union_inputs) != 2:
            raise ValueError("union needs exactly two lexicon files")
        a, b = (read_lexicon(p) for p in union_inputs)
        name = name or _union_name(a.name, b.name)
        artifacts += _write_adapted(ctx, union_lexicons(a, b, name))
        ctx.manifest(f"adapt-union-{name}", union_inputs, artifacts)
        return artifacts

    model, model_path = _load_model(ctx, embeddings)
    inputs.append(model_path)
    config = ctx.adapt_config()
    h4n_path = require_input(ctx.config, "h4n_words")
    h4n = read_wordlist(h4n_path)
    inputs.append(h4n_path)

    if method == "h4n-re":
        neg_path = require_input(ctx.config, "h4n_negative")
        inputs.append(neg_path)
        lex = adapt_re(read_wordlist(neg_path), h4n, model, config, name="H4N_RE", category="negative")
        artifacts += _write_adapted(ctx, _maybe_calibrate(ctx, lex))
        ctx.manifest("adapt-h4n-re", inputs, artifacts)
        return artifacts

    manual = [m for m in _manual_lexicons(ctx) if not only or m.name in only]
    if only and len(manual) != len(only):
        raise ValueError(f"unknown lexicon(s) in --only: {sorted(set(only) - {m.name for m in manual})}")
    inputs += [ctx.config["inputs"]["lm_lexicons"][m.name]["path"] for m in manual]
    if method == "add":
        master_path = require_input(ctx.config, "lm_master")
        inputs.append(master_path)
        master = read_wordlist(master_path)
        train_universe = h4n & master
        candidates = h4n - master
        for src in manual:
            stray = src.words - master
            if stray:
                raise ValueError(f"{src.name}: {len(stray)} word(s) missing from the master list")
            lex = adapt_add(src, train_universe, candidates, model, config, name=f"{_stem(src.name)}_ADD")
            artifacts += _write_adapted(ctx, lex)
    elif method == "re":
        for src in manual:
            lex = adapt_re(src.words, h4n, model, config, name=f"{_stem(src.name)}_RE", category=src.category)
            artifacts += _write_adapted(ctx, _maybe_calibrate(ctx, lex))
    else:
        raise ValueError(f"unknown adaptation method {method!r}")
    ctx.manifest(f"adapt-{method}", inputs, artifacts)
    return artifacts


def _all_lexicon_paths(ctx: Context) -> list[Path]:
    """Manual lexicons from the config, then every lexicon written under ``<out>/lexicons``."""
    paths = [Path(s["path"]) for s in ctx.config["inputs"]["lm_lexicons"].values()]
    if ctx.config["inputs"]["h4n_negative"]:
        paths.append(Path(ctx.config["inputs"]["h4n_negative"]))
    lexdir = ctx.out / "lexicons"
    if lexdir.is_dir():
        paths += sorted(p for p in lexdir.glob("*.txt"))
    return paths


def _load_lexicons(ctx: Context, files: list[str] | None) -> list[SentimentLexicon]:
    if files:
        return [read_lexicon(p) for p in files]
    lexicons = _manual_lexicons(ctx) if ctx.config["inputs"]["lm_lexicons"] else []
    if ctx.config["inputs"]["h4n_negative"]:
        lexicons.append(read_lexicon(ctx.config["inputs"]["h4n_negative"], name="H4N_ORG", category="negative"))
    lexdir = ctx.out / "lexicons"
    if lexdir.is_dir():
        lexicons += [read_lexicon(p) for p in sorted(lexdir.glob("*.txt"))]
    if not lexicons:
        raise ValueError("no lexicons given or found")
    return lexicons


def stage_textvars(ctx: Context, corpus_path: str | None = None, lexicon_files: list[str] | None = None) -> Path:
    src = Path(corpus_path) if corpus_path else ctx.path("corpus.jsonl")
    lexicons = _load_lexicons(ctx, lexicon_files)
    panel = build_text_panel(read_corpus(src), lexicons)
    out = ctx.path("text_panel.csv")
    write_text_panel(panel, out)
    ctx.manifest("textvars", [src] + (lexicon_files or _all_lexicon_paths(ctx)), [out])
    return out


def stage_finvars(ctx: Context, corpus_path: str | None = None) -> Path:
    src = Path(corpus_path) if corpus_path else ctx.path("corpus.jsonl")
    docs = read_corpus(src)
    filings = pd.DataFrame({"doc_id": [d.doc_id for d in docs], "firm_id": [d.firm_id for d in docs],
                            "filing_date": [d.filing_date for d in docs]})
    paths = {k: require_input(ctx.config, k) for k in ("market", "index", "factors", "fundamentals")}
    market = read_dated_csv(paths["market"], MARKET_COLUMNS)
    index = read_dated_csv(paths["index"], INDEX_COLUMNS)
    factors = read_dated_csv(paths["factors"], FACTOR_COLUMNS)
    fundamentals = read_dated_csv(paths["fundamentals"], FUNDAMENTAL_COLUMNS)
    panel, dropped = build_finvars_panel(filings, market, index, factors, fundamentals)
    if panel.empty:
        raise ValueError("no filing has complete market data")
    out, drop_out = ctx.path("fin_panel.csv"), ctx.path("fin_dropped.csv")
    panel.to_csv(out, index=False, float_format="%.10g", lineterminator="\n")
    dropped.to_csv(drop_out, index=False, lineterminator="\n")
    ctx.manifest("finvars", [src] + list(paths.values()), [out, drop_out])
    return out


def _write_regression(ctx: Context, results, stem: str) -> list[Path]:
    from .plotting import plot_coefficients

    tsv, js, png = ctx.path(f"{stem}.tsv"), ctx.path(f"{stem}.json"), ctx.path(f"{stem}.png")
    tsv.write_text(report(results), encoding="utf-8")
    js.write_text(results_json(results), encoding="utf-8")
    plot_coefficients(results, png)
    repaired = [", ".join(r.display) for r in results if r.repaired]
    if repaired:
        log.warning("%s: %d of %d two-way covariance matrices were indefinite and repaired "
                    "(vcov_repaired in %s)", stem, len(repaired), len(results), js.name)
        log.debug("repaired models: %s", "; ".join(repaired))
    return [tsv, js, png]


def stage_regress_generic(ctx: Context, panel_path: str, dependent: str, regressors: list[str],
                          controls: list[str], firm_col: str, time_col: str) -> list[Path]:
    df = pd.read_csv(panel_path)
    missing = [c for c in [dependent, firm_col, time_col] + regressors + controls if c not in df.columns]
    if missing:
        raise ValueError(f"{panel_path}: missing columns {missing}")
    ctrl = df[controls] if controls else None
    res = fit_panel(df, dependent, regressors, firm_col, time_col, ctrl,
                    correction=ctx.config["regress"]["small_sample_correction"])
    artifacts = _write_regression(ctx, [res], f"regress_{dependent}")
    ctx.manifest(f"regress-{dependent}", [panel_path], artifacts)
    return artifacts


def stage_regress(ctx: Context, text_panel: str | None = None, fin_panel: str | None = None) -> list[Path]:
    """Pipeline regressions: every configured model for every dependent variable."""
    tp = Path(text_panel) if text_panel else ctx.path("text_panel.csv")
    fp = Path(fin_panel) if fin_panel else ctx.path("fin_panel.csv")
    text = pd.read_csv(tp, dtype={"firm_id": str})
    fin = pd.read_csv(fp, dtype={"firm_id": str})
    df = fin.merge(text.drop(columns=["firm_id", "filing_date"]), on="doc_id", how="inner", validate="1:1")
    if df.empty:
        raise ValueError("text and financial panels share no documents")
    df["time_id"] = pd.to_datetime(df["filing_date"]).dt.year
    r = ctx.config["regress"]
    text_vars = [c for c in text.columns if c not in ID_COLUMNS]
    models = r["models"] or [[v] for v in text_vars]
    unknown = sorted({v for m in models for v in m} - set(text_vars))
    if unknown:
        raise ConfigError(f"regress.models names unknown text variable(s): {unknown}")
    scaled = df.copy()
    scaled[text_vars] = scaled[text_vars] * r["text_scale"]

    artifacts = []
    for dep in r["dependents"]:
        controls = build_controls(dep, scaled)
        results = [fit_panel(scaled, dep, m, "firm_id", "time_id", controls, r["small_sample_correction"])
                   for m in models]
        artifacts += _write_regression(ctx, results, f"regress_{dep}")
    ctx.manifest("regress", [tp, fp], artifacts)
    return artifacts


def stage_analyze(ctx: Context, what: str, lexicon_files: list[str] | None = None, embeddings: str | None = None,
                  probes: list[str] | None = None, k: int | None = None) -> list[Path]:
    from .plotting import plot_overlap, plot_sizes

    artifacts: list[Path] = []
    inputs: list = []
    if what in ("sizes", "overlap"):
        lexicons = _load_lexicons(ctx, lexicon_files)
        inputs = lexicon_files or _all_lexicon_paths(ctx)
        if what == "sizes":
            table = size_table(lexicons)
            tsv, png = ctx.path("sizes.tsv"), ctx.path("sizes.png")
            table.to_csv(tsv, sep="\t", index=False, lineterminator="\n")
            plot_sizes(list(table["name"]), list(table["size"]), png)
        else:
            m = overlap_matrix(lexicons)
            tsv, png = ctx.path("overlap.tsv"), ctx.path("overlap.png")
            tsv.write_text(m.to_tsv(), encoding="utf-8")
            plot_overlap(m, png)
        artifacts += [tsv, png]
    elif what == "neighbors":
        model, mp = _load_model(ctx, embeddings)
        inputs = [mp]
        a = ctx.config["analyze"]
        rep = neighbor_report(model, probes or a["neighbor_probes"], k or a["neighbor_k"])
        txt, tsv = ctx.path("neighbors.txt"), ctx.path("neighbors.tsv")
        txt.write_text(rep.to_text(), encoding="utf-8")
        tsv.write_text(rep.to_tsv(), encoding="utf-8")
        if rep.missing:
            log.warning("probe word(s) not in vocabulary: %s", ", ".join(rep.missing))
        artifacts += [txt, tsv]
    else:
        raise ValueError(f"unknown analysis {what!r}")
    ctx.manifest(f"analyze-{what}", inputs, artifacts)
    return artifacts


def stage_pipeline(ctx: Context) -> None:
    steps = [
        ("ingest", lambda: stage_ingest(ctx)),
        ("train-embeddings", lambda: stage_embeddings(ctx)),
        ("adapt add", lambda: stage_adapt(ctx, "add")),
        ("adapt re", lambda: stage_adapt(ctx, "re")),
        ("adapt union", lambda: _pipeline_unions(ctx)),
        ("adapt h4n-re", lambda: stage_adapt(ctx, "h4n-re")),
        ("textvars", lambda: stage_textvars(ctx)),
        ("finvars", lambda: stage_finvars(ctx)),
        ("regress", lambda: stage_regress(ctx)),
        ("analyze sizes", lambda: stage_analyze(ctx, "sizes")),
        ("analyze overlap", lambda: stage_analyze(ctx, "overlap")),
        ("analyze neighbors", lambda: stage_analyze(ctx, "neighbors")),
    ]
    for name, fn in steps:
        log.info("pipeline: %s", name)
        try:
            fn()
        except Exception as exc:
            raise StageError(name, exc) from exc


def _pipeline_unions(ctx: Context) -> None:
    lexdir = ctx.out / "lexicons"
    for m in _manual_lexicons(ctx):
        stem = _stem(m.name)
        stage_adapt(ctx, "union", union_inputs=[str(lexdir / f"{stem}_RE.txt"), str(lexdir / f"{stem}_ADD.txt")])


def make_synthetic(out: Path, seed: int, target_tokens: int, n_firms: int) -> Path:
    """Write a small self-consistent demo dataset and a config that runs the full pipeline on it."""
    import yaml

    from .synthetic import planted_corpus, synthetic_market

    out.mkdir(parents=True, exist_ok=True)
    pc = planted_corpus(seed=seed, target_tokens=target_tokens, n_firms=n_firms)
    write_corpus(pc.docs, out / "corpus.jsonl")
    master_distractors = pc.distractors[:200]
    lists = {
        "lm_master.txt": pc.seeds + master_distractors,
        "neg_lm.txt": pc.seeds,
        "unc_lm.txt": [w for i, w in enumerate(master_distractors) if i % 8 == 0],
        "lit_lm.txt": [w for i, w in enumerate(master_distractors) if i % 8 == 1],
        "h4n.txt": pc.universe,
        "h4n_neg.txt": pc.seeds + pc.planted[:20],
    }
    for fname, words in lists.items():
        (out / fname).write_text("".join(w + "\n" for w in sorted(words)), encoding="utf-8")
    data = synthetic_market(pc.docs, set(pc.seeds + pc.planted), seed=seed)
    for key, df in data.items():
        df.to_csv(out / f"{key}.csv", index=False, float_format="%.10g", lineterminator="\n",
                  date_format="%Y-%m-%d")
    config = {
        "seed": seed,
        "inputs": {
            "corpus": "corpus.jsonl", "h4n_words": "h4n.txt", "h4n_negative": "h4n_neg.txt",
            "lm_master": "lm_master.txt",
            "lm_lexicons": {"neg_lm": {"path": "neg_lm.txt", "category": "negative"},
                            "unc_lm": {"path": "unc_lm.txt", "category": "uncertain"},
                            "lit_lm": {"path": "lit_lm.txt", "category": "litigious"}},
            "market": "market.csv", "index": "index.csv", "factors": "factors.csv",
            "fundamentals": "fundamentals.csv",
        },
        "corpus": {"min_tokens": 2000},
        "embeddings": {"dim": 50, "min_count": 5},
        "analyze": {"neighbor_probes": [pc.seeds[0], pc.planted[0], pc.distractors[0], "absentword"],
                    "neighbor_k": 5},
    }
    path = out / "config.yaml"
    path.write_text(yaml.safe_dump(config, sort_keys=False), encoding="utf-8")
    return path


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--deterministic", action="store_true",
                        help="single-worker embedding training and fold fitting")
    common.add_argument("--out", metavar="DIR", default="finlex_out", help="artifact directory (default: %(default)s)")
    common.add_argument("--log-level", choices=list(LOG_LEVELS), default="warn")

    p = argparse.ArgumentParser(prog="finlex", description=__doc__)
    p.add_argument("--version", action="version", version=f"finlex {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="tokenize and filter a raw corpus")
    s.add_argument("--input", help="JSON-lines corpus (default: inputs.corpus)")

    s = sub.add_parser("train-embeddings", parents=[common], help="train CBOW embeddings")
    s.add_argument("--corpus", help="tokenized corpus (default: <out>/corpus.jsonl)")

    s = sub.add_parser("adapt", parents=[common], help="build adapted lexicons")
    s.add_argument("method", choices=["add", "re", "h4n-re", "union"])
    s.add_argument("lexicons", nargs="*", help="two lexicon files (union only)")
    s.add_argument("--embeddings", help="model file (.npz or text)")
    s.add_argument("--only", nargs="+", metavar="NAME", help="restrict add/re to these manual lexicons")
    s.add_argument("--name", help="name of the union lexicon")

    s = sub.add_parser("textvars", parents=[common], help="per-document text variables")
    s.add_argument("--corpus")
    s.add_argument("--lexicons", nargs="+", metavar="FILE")

    s = sub.add_parser("finvars", parents=[common], help="dependent variables and controls")
    s.add_argument("--corpus")

    s = sub.add_parser("regress", parents=[common], help="two-way clustered OLS with table output")
    s.add_argument("--panel", help="generic panel CSV; omit to regress the pipeline panels")
    s.add_argument("--bundled", action="store_true", help="use the bundled synthetic panel")
    s.add_argument("--dependent")
    s.add_argument("--regressors", nargs="+")
    s.add_argument("--controls", nargs="+", default=[])
    s.add_argument("--firm-col", default="firm_id")
    s.add_argument("--time-col", default="time_id")

    s = sub.add_parser("analyze", parents=[common], help="dictionary comparison reports")
    s.add_argument("what", choices=["sizes", "overlap", "neighbors"])
    s.add_argument("--lexicons", nargs="+", metavar="FILE")
    s.add_argument("--embeddings")
    s.add_argument("--probes", nargs="+")
    s.add_argument("--k", type=int)

    sub.add_parser("pipeline", parents=[common], help="run every stage in order")

    s = sub.add_parser("make-synthetic", parents=[common], help="write a demo dataset and config to --out")
    s.add_argument("--tokens", type=int, default=300_000)
    s.add_argument("--firms", type=int, default=20)
    return p


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=LOG_LEVELS[args.log_level], format="%(levelname)s %(name)s: %(message)s",
                        force=True)
    stage = args.command if args.command not in ("adapt", "analyze") else \
        f"{args.command} {args.method if args.command == 'adapt' else args.what}"
    try:
        if args.command == "make-synthetic":
            path = make_synthetic(Path(args.out), args.seed if args.seed is not None else 1, args.tokens,
                                  args.firms)
            print(path)
            return 0
        args.argv = argv
        ctx = Context(args)
        if args.command == "ingest":
            stage_ingest(ctx, args.input)
        elif args.command == "train-embeddings":
            stage_embeddings(ctx, args.corpus)
        elif args.command == "adapt":
            if args.method != "union" and args.lexicons:
                raise ValueError("positional lexicon files are only used by 'adapt union'")
            stage_adapt(ctx, args.method, args.embeddings, args.only, args.lexicons, args.name)
        elif args.command == "textvars":
            stage_textvars(ctx, args.corpus, args.lexicons)
        elif args.command == "finvars":
            stage_finvars(ctx, args.corpus)
        elif args.command == "regress":
            if args.panel or args.bundled:
                if not args.dependent or not args.regressors:
                    raise ValueError("--dependent and --regressors are required with --panel/--bundled")
                panel = str(BUNDLED_PANEL) if args.bundled else args.panel
                stage_regress_generic(ctx, panel, args.dependent, args.regressors, args.controls,
                                      args.firm_col, args.time_col)
            else:
                stage_regress(ctx)
        elif args.command == "analyze":
            stage_analyze(ctx, args.what, args.lexicons, args.embeddings, args.probes, args.k)
        elif args.command == "pipeline":
            (ctx.out / "config.snapshot.yaml").write_text(dump_config(ctx.config), encoding="utf-8")
            stage_pipeline(ctx)
    except StageError as exc:
        print(f"finlex: stage {exc}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return 1
    except Exception as exc:  # noqa: BLE001 - report and exit nonzero
        print(f"finlex: stage {stage}: {type(exc).__name__}: {exc}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
