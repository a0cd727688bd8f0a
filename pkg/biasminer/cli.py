"""
biasminer - Command Line Interface
Subcommands for every pipeline stage plus the composite run

Exit codes: 0 success, 1 config error, 2 I/O error, 3 data error
"""

from typing import Any, Callable, Dict, List, Optional, Sequence
import argparse
import json
import logging
import sys

from pydantic import TypeAdapter, ValidationError

from biasminer import __version__
from biasminer.core.config import load_config_file, settings
from biasminer.core.exceptions import BiasMinerError, ConfigError, DataError, StorageError
from biasminer.models.crop import CropConfig
from biasminer.models.mining import RuleConfig, SupportThreshold
from biasminer.models.pipeline import PipelineConfig
from biasminer.models.records import RecordFailure
from biasminer.models.synth import SynthSpec
from biasminer.services.codebook import CodebookConfig, read_features, save_codebook, train_codebook
from biasminer.services.miner import build_bitmap_index, format_itemsets, mine_frequent
from biasminer.services.pipeline import PipelineService, region_vector, run_pipeline
from biasminer.services.report import emit_report, format_diversity, format_table
from biasminer.services.rules import (
    RuleSet,
    causal_filter,
    consequent_diversity,
    dump_rules,
    generate_rules,
    load_rules,
    query_rules,
    save_rules,
)
from biasminer.services.synth import default_spec, generate, write_ground_truth
from biasminer.services.vocab_db import load_db, read_records, save_db, write_records
from biasminer.utils.helpers import dict_to_json, read_text, write_text
from biasminer.utils.logger import log_error, setup_logger

logger = logging.getLogger("biasminer.cli")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1)"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_BOOL = TypeAdapter(bool)


class Options:
    """Flag values over config-file values over settings defaults"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file = load_config_file(getattr(args, "config", None))

    def get(self, name: str, default: Any = None) -> Any:
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        if name in self.file:
            return self.file[name]
        return default

    def flag(self, name: str, default: bool = False) -> bool:
        """Boolean option; config files may spell it "false", "no" or 0"""
        return _BOOL.validate_python(self.get(name, default))

    def require(self, name: str) -> Any:
        value = self.get(name)
        if value is None:
            raise ConfigError(f"--{name.replace('_', '-')} is required")
        return value

    def support(self, warn: bool = True) -> str:
        value = self.get("support")
        if value is None:
            if warn:
                logger.warning(
                    f"⚠️  No --support given, using the toolkit default {settings.MINER_SUPPORT}; "
                    "choose a threshold that fits your database size"
                )
            return settings.MINER_SUPPORT
        return str(value)

    def pipeline_config(self, warn_support: bool = True) -> PipelineConfig:
        return PipelineConfig(
            input=self.get("input"),
            codebook=self.get("codebook"),
            db=self.get("db"),
            out=self.get("out"),
            tau=self.get("tau", settings.CROP_TAU),
            k=self.get("k", settings.CODEBOOK_K),
            seed=self.get("seed", settings.SEED),
            support=self.support(warn=warn_support),
            confidence=self.get("confidence", settings.RULE_MIN_CONFIDENCE),
            max_consequent=self.get("max_consequent", settings.RULE_MAX_CONSEQUENT),
            stopwords=self.flag("stopwords", settings.TOKENIZER_STOPWORDS),
            normalize=self.flag("normalize", settings.CODEBOOK_NORMALIZE),
            language_only=self.flag("language_only"),
            workers=self.get("workers", settings.WORKERS),
        )

    def rule_config(self) -> RuleConfig:
        return RuleConfig(
            min_confidence=self.get("confidence", settings.RULE_MIN_CONFIDENCE),
            min_support=SupportThreshold.parse(self.support()),
            max_consequent_size=self.get("max_consequent", settings.RULE_MAX_CONSEQUENT),
        )


def _emit(text: str, out: Optional[str] = None):
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


# ============================================
# SUBCOMMANDS
# ============================================

def cmd_synth(options: Options) -> int:
    out = options.require("out")
    spec_path = options.get("spec")
    if spec_path:
        try:
            payload = json.loads(read_text(spec_path))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Spec file is not valid JSON: {spec_path} ({e})")
        for name in ("record_count", "seed", "attention_mode"):
            if options.get(name) is not None:
                payload[name] = options.get(name)
        spec = SynthSpec.model_validate(payload)
    else:
        spec = default_spec(
            record_count=options.get("record_count", 10000),
            seed=options.get("seed", settings.SEED),
            attention_mode=options.get("attention_mode", "delta"),
        )

    result = generate(spec, CropConfig(tau=options.get("tau", settings.CROP_TAU)))
    write_records(out, result.records)
    save_codebook(result.codebook, options.get("codebook") or f"{out}.codebook")
    write_ground_truth(options.get("truth") or f"{out}.truth.tsv", result.ground_truth)

    for rule in result.ground_truth:
        logger.info(
            f"🌱 {' '.join(rule.antecedent)} -> {rule.consequent}* | support {rule.support} "
            f"| confidence {rule.support}/{rule.antecedent_count}"
        )
    return 0


def _is_feature_file(path: str) -> bool:
    try:
        with open(path, "rb") as handle:
            for raw in handle:
                if raw.strip():
                    try:
                        payload = json.loads(raw.decode("utf-8"))
                    except ValueError:
                        return False
                    return isinstance(payload, dict) and "id" in payload and "record_id" not in payload
    except OSError as e:
        raise StorageError(f"Cannot read {path}: {e}")
    return False


def cmd_build_codebook(options: Options) -> int:
    source = options.require("input")
    out = options.get("out") or options.require("codebook")
    crop = CropConfig(tau=options.get("tau", settings.CROP_TAU))

    if _is_feature_file(source):
        _, matrix = read_features(source)
        vectors = list(matrix)
    else:
        vectors = []
        for line_no, record in read_records(source):
            if isinstance(record, RecordFailure) or record.codeword is not None:
                continue
            try:
                vector = region_vector(record, crop)
            except DataError as e:
                logger.warning(f"Skipping line {line_no}: {e.message}")
                continue
            if vector is not None:
                vectors.append(vector)

    if not vectors:
        raise ConfigError(f"No feature vectors found in {source}")

    config = CodebookConfig(
        k=options.get("k", settings.CODEBOOK_K),
        seed=options.get("seed", settings.SEED),
        normalize=options.flag("normalize", settings.CODEBOOK_NORMALIZE),
        workers=options.get("workers", settings.WORKERS),
    )
    save_codebook(train_codebook(vectors, config), out)
    return 0


def cmd_ingest(options: Options) -> int:
    config = options.pipeline_config(warn_support=False)
    db_path = options.require("db")
    source = options.require("input")

    service = PipelineService(config)
    db = service.ingest(record for _, record in read_records(source))
    save_db(db, db_path)
    sys.stdout.write(dict_to_json(service.summary.model_dump(), pretty=True) + "\n")
    return 0


def cmd_mine(options: Options) -> int:
    db = load_db(options.require("db"))
    threshold = SupportThreshold.parse(options.support())
    frequent = mine_frequent(build_bitmap_index(db), threshold, workers=options.get("workers", settings.WORKERS)) if len(db) else []
    _emit(format_itemsets(frequent, db.vocabulary), options.get("out"))
    return 0


def cmd_rules(options: Options) -> int:
    db = load_db(options.require("db"))
    config = options.rule_config()
    index = build_bitmap_index(db)
    frequent = mine_frequent(index, config.min_support, workers=options.get("workers", settings.WORKERS)) if len(db) else []
    rules = causal_filter(generate_rules(frequent, index, config, fingerprint=db.fingerprint()), db.vocabulary)

    out = options.get("out")
    if out:
        save_rules(rules, db.vocabulary, out)
    else:
        sys.stdout.write(dump_rules(rules, db.vocabulary))
    return 0


def cmd_query(options: Options) -> int:
    db = load_db(options.require("db"))
    rules = load_rules(options.require("rules"), db.vocabulary)
    matches = query_rules(rules, db.vocabulary, options.require("terms"))[:options.get("limit")]

    if options.get("format", "table") == "structured":
        _emit(dump_rules(RuleSet(tuple(matches), rules.provenance), db.vocabulary), options.get("out"))
    else:
        _emit(format_table(matches, db.vocabulary), options.get("out"))
    return 0


def cmd_report(options: Options) -> int:
    db = load_db(options.require("db"))
    rules = load_rules(options.require("rules"), db.vocabulary)
    text = emit_report(
        rules,
        db.vocabulary,
        format=options.get("format", "table"),
        by_type=options.flag("by_type"),
        limit=options.get("limit"),
    )
    _emit(text, options.get("out"))
    return 0


def cmd_pipeline(options: Options) -> int:
    result = run_pipeline(options.pipeline_config())
    sys.stdout.write(dict_to_json(result.summary.model_dump(), pretty=True) + "\n")
    return 0


def cmd_compare(options: Options) -> int:
    db = load_db(options.require("db"))
    rules = load_rules(options.require("rules"), db.vocabulary)
    sections = []
    for side in ("left", "right"):
        terms = options.require(side)
        sections.append(format_diversity(terms, consequent_diversity(rules, db.vocabulary, terms)))
    _emit("\n".join(sections), options.get("out"))
    return 0


def cmd_serve(options: Options) -> int:
    import uvicorn

    from biasminer.main import create_app

    app = create_app(rules_path=options.require("rules"), db_path=options.require("db"))
    uvicorn.run(app, host=options.get("host", settings.HOST), port=options.get("port", settings.PORT))
    return 0


# ============================================
# PARSER
# ============================================

def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON file overriding settings defaults (flags still win)")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")


def _add(subparsers, name: str, handler: Callable[[Options], int], help: str, flags: Sequence[str]) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(name, help=help)
    _add_common(parser)
    for flag in flags:
        kwargs = _FLAGS[flag]
        parser.add_argument(f"--{flag}", dest=flag.replace("-", "_"), **kwargs)
    parser.set_defaults(handler=handler)
    return parser


_FLAGS: Dict[str, Any] = {
    "input": {"help": "JSON-lines ingest file (or feature file for build-codebook)"},
    "codebook": {"help": "Codebook file"},
    "db": {"help": "Transaction database file"},
    "rules": {"help": "Structured rule dump"},
    "out": {"help": "Output file (stdout when omitted, where supported)"},
    "truth": {"help": "Ground-truth TSV (default <out>.truth.tsv)"},
    "spec": {"help": "SynthSpec JSON file (default: built-in demo spec)"},
    "tau": {"type": float, "help": f"Crop mass fraction (default {settings.CROP_TAU})"},
    "k": {"type": int, "help": f"Codebook size (default {settings.CODEBOOK_K})"},
    "seed": {"type": int, "help": "Random seed"},
    "support": {"help": "Minimum support: count (30), percent (2.5%%) or fraction (0.05)"},
    "confidence": {"type": float, "help": f"Minimum confidence (default {settings.RULE_MIN_CONFIDENCE})"},
    "max-consequent": {"type": int, "help": "Largest consequent size"},
    "workers": {"type": int, "help": "Parallel workers (results do not change)"},
    "format": {"choices": ["table", "structured"], "help": "Report format"},
    "limit": {"type": int, "help": "Maximum rules per table"},
    "terms": {"help": "Question words, e.g. \"what sport\""},
    "left": {"help": "First query group"},
    "right": {"help": "Second query group"},
    "host": {"help": "Bind address"},
    "port": {"type": int, "help": "Bind port"},
    "record-count": {"type": int, "help": "Number of synthetic records"},
    "attention-mode": {"choices": ["delta", "blob", "uniform"], "help": "Synthetic attention shape"},
    "language-only": {"action": "store_true", "default": None, "help": "Build transactions without visual words"},
    "stopwords": {"action": "store_true", "default": None, "help": "Drop common English stopwords"},
    "normalize": {"action": "store_true", "default": None, "help": "L2-normalize features"},
    "by-type": {"action": "store_true", "default": None, "help": "One table per question type"},
}

_MINING = ["support", "confidence", "max-consequent", "workers"]
_INGEST = ["input", "codebook", "db", "tau", "k", "seed", "stopwords", "normalize", "language-only", "workers"]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biasminer", description="Mine question/visual-word/answer association rules from VQA model outputs")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    _add(subparsers, "synth", cmd_synth, "Generate a synthetic dataset with planted biases",
         ["out", "codebook", "truth", "spec", "record-count", "seed", "attention-mode", "tau"])
    _add(subparsers, "build-codebook", cmd_build_codebook, "Train a visual codebook with k-means",
         ["input", "out", "codebook", "k", "seed", "tau", "normalize", "workers"])
    _add(subparsers, "ingest", cmd_ingest, "Build the transaction database", _INGEST)
    _add(subparsers, "mine", cmd_mine, "Mine frequent itemsets", ["db", "out", "support", "workers"])
    _add(subparsers, "rules", cmd_rules, "Generate causal association rules", ["db", "out"] + _MINING)
    _add(subparsers, "query", cmd_query, "Rules whose antecedent contains the query words",
         ["db", "rules", "terms", "limit", "format", "out"])
    _add(subparsers, "report", cmd_report, "Render a rule report",
         ["db", "rules", "format", "by-type", "limit", "out"])
    _add(subparsers, "pipeline", cmd_pipeline, "Ingest, mine and generate rules in one run",
         [flag for flag in _INGEST if flag != "workers"] + ["out"] + _MINING)
    _add(subparsers, "compare", cmd_compare, "Compare answer diversity of two query groups",
         ["db", "rules", "left", "right", "out"])
    _add(subparsers, "serve", cmd_serve, "Serve rules over HTTP", ["db", "rules", "host", "port"])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logger("biasminer", level=args.log_level, stream=sys.stderr)

    try:
        return args.handler(Options(args))
    except BiasMinerError as e:
        log_error(logger, e, args.command)
        return e.exit_code
    except ValidationError as e:
        log_error(logger, e, args.command)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
