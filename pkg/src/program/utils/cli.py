import argparse
import json
import sys
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Callable, Optional

from pydantic import ValidationError

from program.ablation.builder import AblationSpec, build, materialize, partition, write_manifest
from program.alignment.mexa import layerwise_scores
from program.apis.bootstrap import bootstrap_backends, optional, require
from program.corpus.io import CorpusIndex, IngestReport, read_corpus, read_detections, write_corpus, write_detections
from program.corpus.models import LanguagePair
from program.detection.classifiers import TokenLevelClassifier
from program.detection.detector import DetectionReport, Detector, detect_corpus
from program.detection.encoders import CrossLingualEncoder
from program.settings.manager import SettingsManager
from program.settings.models import AppModel
from program.stats.report import collect, emit_report
from program.synthesis.backends import TokenCounter, TokenCsGenerator, Translator
from program.synthesis.mixing import Allocation, execute_mix, plan_mix
from program.synthesis.sft import MisalignedInputError, export_sft_records, sft_tasks, write_sft_records
from program.synthesis.synthesizer import SynthesisPlan, allocate_and_synthesize
from program.tagging.scripts import load_profiles
from program.types import AblationMode, CsType, MixPreset, ReportFormat, Side, SizeUnit
from program.utils.logging import create_progress_bar, log_cleaner, logger, setup_logger

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2
STATUS = {EXIT_OK: "ok", EXIT_PARTIAL: "partial", EXIT_FATAL: "fatal"}

LEXICON_HINT = "pass --lexicon or set backends.lexicon"


class UsageError(Exception):
    """Raised for command-line input argparse cannot validate on its own"""


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON settings file.")
    common.add_argument("--pair", help="Language pair / script profile, e.g. en-zh.")
    common.add_argument("--seed", type=int, help="Global seed for every sampling decision.")
    common.add_argument("--threads", type=int, help="Worker threads; never changes outputs.")
    common.add_argument("--log-level", dest="log_level", help="Log level (DEBUG, INFO, ...).")
    common.add_argument("--log-dir", dest="log_dir", type=Path, help="Also log to a rotating file here.")
    common.add_argument("--strict", action="store_true", default=None, help="Abort on the first malformed input line.")
    common.add_argument("--report", type=Path, help="Run report path (default: <out>.report.json).")
    common.add_argument("--profiles", type=Path, help="JSON file with extra script profiles.")
    common.add_argument("--lexicon", type=Path, help="Bilingual lexicon TSV for the dictionary backends.")
    common.add_argument("--translator", choices=["dictionary", "remote"])
    common.add_argument("--generator", choices=["dictionary", "remote"])
    common.add_argument("--token-classifier", dest="token_classifier", choices=["heuristic", "remote"])
    common.add_argument("--endpoint", help="Chat-completions URL for remote backends.")
    common.add_argument("--model", help="Model name for remote backends.")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_arguments()
    parser = argparse.ArgumentParser(prog="syncs", description="Code-switching corpus toolkit.")
    parser.add_argument("--clean_logs", action="store_true", help="Clean old logs.")
    commands = parser.add_subparsers(dest="command")

    detect = commands.add_parser("detect", parents=[common], help="Detect and classify code-switching segments.")
    detect.add_argument("--in", dest="input", type=Path, required=True)
    detect.add_argument("--out", type=Path, required=True)
    detect.add_argument("--threshold", type=float, help="Sentence annotation similarity threshold.")
    detect.add_argument("--window", type=int, help="Sentences searched on each side for an annotation partner.")
    detect.add_argument("--min-chars", dest="min_chars", type=int, help="Script characters needed for a pure tag.")
    detect.add_argument("--no-prefilter", dest="prefilter", action="store_false", default=None,
                        help="Tag every document, not only those containing both scripts.")

    stats = commands.add_parser("stats", parents=[common], help="Segment distribution of a detection file.")
    stats.add_argument("--in", dest="input", type=Path, required=True)
    stats.add_argument("--out", type=Path)
    stats.add_argument("--format", type=ReportFormat, choices=list(ReportFormat), default=ReportFormat.json)

    ablate = commands.add_parser("ablate", parents=[common], help="Build an ablation corpus by substitution.")
    ablate.add_argument("--mode", type=AblationMode, choices=list(AblationMode), required=True)
    ablate.add_argument("--main", type=Path, required=True, help="Detection file of the main corpus.")
    ablate.add_argument("--pool", type=Path, required=True, help="Detection file of the holdout pool.")
    ablate.add_argument("--out", type=Path, required=True)
    ablate.add_argument("--manifest", type=Path, help="Manifest path (default: <out>.manifest.jsonl).")
    ablate.add_argument("--size-unit", dest="size_unit", type=SizeUnit, choices=list(SizeUnit), default=SizeUnit.documents)
    ablate.add_argument("--budget", type=int, default=0, help="Token budget for monolingual addition.")

    synthesize = commands.add_parser("synthesize", parents=[common], help="Inject synthetic code-switching.")
    synthesize.add_argument("--in", dest="input", type=Path, required=True)
    synthesize.add_argument("--out", type=Path, required=True)
    _synthesis_arguments(synthesize)
    synthesize.add_argument("--side", choices=[s.value for s in Side])
    synthesize.add_argument("--type", dest="cs_type", choices=[t.value for t in CsType])
    synthesize.add_argument("--budget", type=int, help="New opposite-language token budget.")
    synthesize.add_argument("--cap", type=float, help="Fraction of documents eligible for modification.")

    mix = commands.add_parser("mix", parents=[common], help="Run a mixing strategy over one or more corpora.")
    mix.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True)
    mix.add_argument("--out-dir", dest="out_dir", type=Path, required=True)
    _synthesis_arguments(mix)
    mix.add_argument("--preset", choices=[p.value for p in MixPreset])
    mix.add_argument("--budget", type=int, help="Total token budget split by the preset.")
    mix.add_argument("--allocation", action="append", default=[], metavar="SIDE:TYPE:BUDGET",
                     help="Explicit allocation, repeatable; overrides --preset.")

    sft = commands.add_parser("sft-export", parents=[common], help="Export SFT records for a token-level generator.")
    sft.add_argument("--in", dest="input", type=Path, required=True,
                     help="JSONL of {source, target, annotation, replacement, reverse_annotation, reverse_replacement}.")
    sft.add_argument("--out", type=Path, required=True)

    mexa = commands.add_parser("mexa", parents=[common], help="Layer-wise cross-lingual alignment scores.")
    mexa.add_argument("--layers", nargs="+", required=True, metavar="E.emb:F.emb")
    mexa.add_argument("--out", type=Path, help="JSON report path.")
    mexa.add_argument("--csv", type=Path, help="CSV layer,score path.")

    count = commands.add_parser("count-tokens", parents=[common], help="Per-language token totals of a corpus.")
    count.add_argument("--in", dest="input", type=Path, required=True)
    count.add_argument("--out", type=Path)
    return parser


def _synthesis_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--density", type=float, help="Fraction of pure sentences modified per eligible document.")
    parser.add_argument("--term-density", dest="term_density", type=float,
                        help="Fraction of lexicon terms edited per sentence by the dictionary generator.")


def _set(target: dict, path: str, value):
    if value is None:
        return
    *sections, key = path.split(".")
    for section in sections:
        target = target.setdefault(section, {})
    target[key] = value


def settings_overrides(args: argparse.Namespace) -> dict:
    """Settings overrides from the flags that were actually given."""
    flags = vars(args)
    overrides: dict = {}
    for flag, path in (
        ("pair", "pair"),
        ("seed", "seed"),
        ("threads", "threads"),
        ("log_level", "log_level"),
        ("strict", "corpus.strict"),
        ("min_chars", "tagging.min_chars"),
        ("threshold", "detector.annt_similarity_threshold"),
        ("window", "detector.alignment_window"),
        ("prefilter", "detector.character_prefilter"),
        ("side", "synthesis.side"),
        ("cs_type", "synthesis.cs_type"),
        ("cap", "synthesis.doc_eligibility_cap"),
        ("term_density", "synthesis.term_density"),
        ("translator", "backends.translator"),
        ("generator", "backends.generator"),
        ("token_classifier", "backends.token_classifier"),
        ("endpoint", "backends.endpoint"),
        ("model", "backends.model"),
    ):
        _set(overrides, path, flags.get(flag))
    for flag, path in (("profiles", "tagging.profiles_file"), ("lexicon", "backends.lexicon")):
        if flags.get(flag) is not None:
            _set(overrides, path, str(flags[flag]))
    if args.command == "synthesize":
        _set(overrides, "synthesis.token_budget", flags.get("budget"))
        _set(overrides, "synthesis.sentence_density", flags.get("density"))
    if args.command == "mix":
        _set(overrides, "mix.preset", flags.get("preset"))
        _set(overrides, "mix.total_budget", flags.get("budget"))
        _set(overrides, "mix.sentence_density", flags.get("density"))
    return overrides


def _tracked(items: Iterable, description: str, total: Optional[int] = None) -> Iterator:
    progress, _ = create_progress_bar(total)
    with progress:
        task = progress.add_task(description, total=total)
        for item in items:
            yield item
            progress.advance(task)


def _cmd_detect(args, settings: AppModel, pair: LanguagePair) -> tuple[dict, bool]:
    ingest, report = IngestReport(), DetectionReport()
    detector = Detector(
        pair,
        require(CrossLingualEncoder, LEXICON_HINT),
        optional(TokenLevelClassifier),
        cfg=settings.detector,
        min_chars=settings.tagging.min_chars,
        strict=settings.corpus.strict,
    )
    corpus = read_corpus(args.input, pair, settings.corpus.strict, ingest)
    results = detect_corpus(corpus, pair, detector.encoder, threads=settings.threads, report=report, detector=detector)
    write_detections(_tracked(results, "Detecting"), args.out)
    result = {"ingest_warnings": ingest.warnings, **report.model_dump(exclude={"max_errors"})}
    return result, bool(ingest.warnings or report.failed or report.degraded)


def _cmd_stats(args, settings: AppModel, pair: LanguagePair) -> tuple[dict, bool]:
    ingest = IngestReport()
    stats = collect(read_detections(args.input, pair, settings.corpus.strict, ingest))
    text = emit_report(stats, args.format)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return {"ingest_warnings": ingest.warnings, **stats.to_report()}, bool(ingest.warnings)


def _cmd_ablate(args, settings: AppModel, pair: LanguagePair) -> tuple[dict, bool]:
    ingest = IngestReport()
    strict = settings.corpus.strict
    spec = AblationSpec(mode=args.mode, seed=settings.seed, size_unit=args.size_unit, token_budget=args.budget)
    needs_tokens = args.size_unit == SizeUnit.tokens or args.mode == AblationMode.Monolingual
    parts = partition(
        read_detections(args.main, pair, strict, ingest),
        read_detections(args.pool, pair, strict, ingest),
        require(TokenCounter, "no token counter registered") if needs_tokens else None,
    )
    result = build(parts, spec)
    manifest = args.manifest or Path(f"{args.out}.manifest.jsonl")
    write_manifest(result, manifest)

    def documents(path: Path):
        return (d.document for d in read_detections(path, pair, strict, IngestReport()))

    write_corpus(materialize(result, documents(args.main), documents(args.pool)), args.out)
    return {"ingest_warnings": ingest.warnings, "manifest": str(manifest), **result.header()}, bool(ingest.warnings)


def _backends() -> tuple[Translator, TokenCsGenerator, TokenCounter]:
    hint = f"{LEXICON_HINT}, or select a remote backend"
    return (
        require(Translator, hint),
        require(TokenCsGenerator, hint),
        require(TokenCounter, "no token counter registered"),
    )


def _cmd_synthesize(args, settings: AppModel, pair: LanguagePair) -> tuple[dict, bool]:
    ingest = IngestReport()
    synthesis = settings.synthesis
    plan = SynthesisPlan(
        side=synthesis.side,
        cs_type=synthesis.cs_type,
        token_budget=synthesis.token_budget,
        sentence_density=synthesis.sentence_density,
        doc_eligibility_cap=synthesis.doc_eligibility_cap,
        seed=settings.seed,
    )
    translator, generator, counter = _backends()
    index = CorpusIndex(args.input, pair, settings.corpus.strict, ingest)
    result = allocate_and_synthesize(index, plan, pair, translator, generator, counter, settings.threads)
    write_corpus(_tracked(result.apply(index), "Writing", len(index)), args.out)
    accounting = result.report
    partial = bool(ingest.warnings or accounting.failures or accounting.shortfall)
    return {
        "ingest_warnings": ingest.warnings,
        "plan": plan.model_dump(mode="json"),
        "accounting": {accounting.allocation: accounting.summary()},
        "details": accounting.model_dump(mode="json"),
    }, partial


def parse_allocation(value: str) -> Allocation:
    try:
        side, cs_type, budget = value.split(":")
        return Allocation(side=Side(side), cs_type=CsType(cs_type), token_budget=int(budget))
    except (ValueError, ValidationError):
        raise UsageError(f"Allocation must look like 'primary:token-repl:1000', got '{value}'")


def _cmd_mix(args, settings: AppModel, pair: LanguagePair) -> tuple[dict, bool]:
    ingest = IngestReport()
    if args.allocation:
        mix = plan_mix(allocations=[parse_allocation(v) for v in args.allocation])
    else:
        mix = plan_mix(settings.mix.preset, settings.mix.total_budget)
    translator, generator, counter = _backends()
    corpora = [CorpusIndex(path, pair, settings.corpus.strict, ingest) for path in args.inputs]
    outputs = [args.out_dir / path.name for path in args.inputs]
    if len(set(outputs)) != len(outputs):
        raise UsageError("Mixed corpora need distinct file names")
    result = execute_mix(
        corpora, mix, pair, translator, generator, counter,
        seed=settings.seed,
        sentence_density=settings.mix.sentence_density,
        threads=settings.threads,
    )
    for corpus, out in zip(corpora, outputs):
        write_corpus(_tracked(result.apply(corpus), f"Writing {out.name}", len(corpus)), out)
    shortfall = any(r.shortfall for r in result.reports)
    return {
        "ingest_warnings": ingest.warnings,
        "plan": mix.model_dump(mode="json"),
        "outputs": [str(o) for o in outputs],
        "accounting": result.consolidated(),
        "warnings": [w for r in result.reports for w in r.warnings],
    }, bool(ingest.warnings or result.failures or shortfall)


SFT_FIELDS = ("annotation", "replacement", "reverse_annotation", "reverse_replacement")


def _cmd_sft_export(args, settings: AppModel, pair: LanguagePair) -> tuple[dict, bool]:
    rows = []
    with open(args.input, "r", encoding="utf-8") as file:
        for lineno, line in enumerate(file, start=1):
            if not line.strip():
                continue
            row = json.loads(line)
            if not isinstance(row.get("source"), str) or not isinstance(row.get("target"), str):
                raise MisalignedInputError(f"line {lineno}: 'source' and 'target' strings are required")
            rows.append(row)
    pairs = [(row["source"], row["target"]) for row in rows]
    lang_a, lang_b = pair.languages

    def records():
        for (task, src, tgt), name in zip(sft_tasks(lang_a, lang_b), SFT_FIELDS):
            present = [name in row for row in rows]
            if not any(present):
                continue
            if not all(present):
                raise MisalignedInputError(f"'{name}' is missing on {present.count(False)} of {len(rows)} lines")
            directed = pairs if src == lang_a else [(b, a) for a, b in pairs]
            yield from export_sft_records(directed, [row[name] for row in rows], task, src, tgt)

    count = write_sft_records(records(), args.out)
    by_task = {
        f"{task.value}:{src}-{tgt}": len(rows) if rows and name in rows[0] else 0
        for (task, src, tgt), name in zip(sft_tasks(lang_a, lang_b), SFT_FIELDS)
    }
    return {"pairs": len(pairs), "records": count, "by_task": by_task}, False


def parse_layer(value: str) -> tuple[Path, Path]:
    e_path, sep, f_path = value.partition(":")
    if not sep or not e_path or not f_path:
        raise UsageError(f"Layer must look like 'e.emb:f.emb', got '{value}'")
    return Path(e_path), Path(f_path)


def _cmd_mexa(args, settings: AppModel, pair: LanguagePair) -> tuple[dict, bool]:
    result = layerwise_scores([parse_layer(v) for v in args.layers], settings.threads)
    for layer in result.layers:
        score = "error" if layer.score is None else f"{layer.score:.4f}"
        sys.stdout.write(f"{layer.index}\t{score}\n")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(result.to_json(), encoding="utf-8")
    if args.csv:
        args.csv.parent.mkdir(parents=True, exist_ok=True)
        args.csv.write_text(result.to_csv(), encoding="utf-8")
    return result.model_dump(mode="json", exclude_none=True), bool(result.failed)


def _cmd_count_tokens(args, settings: AppModel, pair: LanguagePair) -> tuple[dict, bool]:
    ingest = IngestReport()
    counter = require(TokenCounter, "no token counter registered")
    totals = {lang: {"documents": 0, "tokens": {l: 0 for l in pair.languages}} for lang in pair.languages}
    for doc in read_corpus(args.input, pair, settings.corpus.strict, ingest):
        entry = totals[doc.lang]
        entry["documents"] += 1
        for lang in pair.languages:
            entry["tokens"][lang] += counter.count(doc.text, lang)
    text = json.dumps(totals, indent=2, ensure_ascii=False) + "\n"
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return {"ingest_warnings": ingest.warnings, "totals": totals}, bool(ingest.warnings)


COMMANDS: dict[str, Callable[..., tuple[dict, bool]]] = {
    "detect": _cmd_detect,
    "stats": _cmd_stats,
    "ablate": _cmd_ablate,
    "synthesize": _cmd_synthesize,
    "mix": _cmd_mix,
    "sft-export": _cmd_sft_export,
    "mexa": _cmd_mexa,
    "count-tokens": _cmd_count_tokens,
}


def report_path(args: argparse.Namespace) -> Path:
    """``--report``, else beside the output, else beside the input, else in the working directory."""
    if args.report:
        return args.report
    if getattr(args, "out_dir", None):
        return args.out_dir / f"{args.command}.report.json"
    if getattr(args, "out", None):
        return Path(f"{args.out}.report.json")
    source = getattr(args, "input", None)
    if source:
        return Path(f"{source}.{args.command}.report.json")
    return Path.cwd() / f"{args.command}.report.json"


def write_run_report(
    path: Path,
    args: argparse.Namespace,
    manager: Optional[SettingsManager],
    result: dict,
    exit_code: int,
    error: Optional[str] = None,
):
    """Deterministic run report: resolved settings, arguments and the command's result."""
    report = {
        "command": args.command,
        "exit_code": exit_code,
        "status": STATUS[exit_code],
        "arguments": json.loads(json.dumps(vars(args), default=str)),
        "settings": manager.resolved() if manager is not None else None,
        "result": result,
    }
    if error is not None:
        report["error"] = error
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    except OSError as e:
        logger.error(f"Could not write run report {path}: {e}")


def _fatal(args: argparse.Namespace, manager: Optional[SettingsManager], error: str) -> int:
    write_run_report(report_path(args), args, manager, {}, EXIT_FATAL, error)
    return EXIT_FATAL


def run(argv: list[str]) -> int:
    """Parse ``argv``, run one subcommand and return its exit code.

    Every run that gets as far as a subcommand writes a run report, fatal ones
    included.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_FATAL

    if args.clean_logs:
        log_cleaner()
        logger.info("Cleaned old logs.")
        if not args.command:
            return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_FATAL

    try:
        manager = SettingsManager(args.config, settings_overrides(args))
    except (ValidationError, ValueError, OSError) as e:
        logger.error(f"Invalid settings: {e}")
        return _fatal(args, None, f"invalid settings: {e}")
    settings = manager.settings
    setup_logger(settings.log_level, args.log_dir)

    try:
        if settings.tagging.profiles_file:
            load_profiles(settings.tagging.profiles_file)
        pair = LanguagePair.parse(settings.pair)
        bootstrap_backends(settings, pair)
        result, partial = COMMANDS[args.command](args, settings, pair)
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        logger.opt(exception=True).debug("Traceback")
        return _fatal(args, manager, str(e))

    exit_code = EXIT_PARTIAL if partial else EXIT_OK
    write_run_report(report_path(args), args, manager, result, exit_code)
    logger.log("COMPLETED", f"{args.command} finished with exit code {exit_code}")
    return exit_code
