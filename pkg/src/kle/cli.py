"""Command line interface: ``kle score | cluster | evaluate | ecp``.

Options can also come from a TOML file (``--config``); explicit flags win.
Exit codes: 0 success, 2 validation error, 3 provider failure, 4 partial
results.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import DegenerateLabels, KLEError, ProviderError, ValidationError
from .estimators import DEFAULT_CONFIGS, METHODS, score_answer_set
from .evaluation import evaluate_scenario, win_rate, write_reports_csv, write_reports_json
from .graph import AnswerSet, bidirectional_cluster
from .hyperparams import entropy_convergence_curve, select_lengthscale, write_curves_csv
from .kernels import KernelConfig
from .nli import CachedNli, FileNli, HttpNli, MemoNli, MockNli

log = logging.getLogger("kle")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_PROVIDER, EXIT_PARTIAL = 0, 2, 3, 4

DEFAULTS: dict[str, Any] = {
    "provider": "mock",
    "cache": None,
    "endpoint": None,
    "timeout": 30.0,
    "nli_model": "",
    "mock_rules": None,
    "methods": list(METHODS),
    "scheme": "one-hot",
    "prob_mode": None,
    "nli_include_question": True,
    "workers": 1,
    "t": 0.3,
    "alpha": 0.5,
    "nu": 1.0,
    "kappa": 1.0,
    "normalized_laplacian": False,
    "kernels": {},
    "resamples": 1000,
    "seed": 0,
    "vertices": [5, 10, 20],
    "family": "heat",
    "params": [0.1, 0.3, 1.0, 5.0, 10.0],
    "schedule": "sequential",
    "threshold": 0.1,
}
# settings that do not change results and stay out of the config hash
_NON_SEMANTIC = {"workers", "output", "out_dir", "config", "command", "func", "verbose"}


class UsageError(ValidationError):
    pass


# ---------------------------------------------------------------- config


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file {path} does not exist")
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise UsageError(f"{path}: {exc}") from None
        unknown = set(data) - set(DEFAULTS) - {"input", "output", "out_dir", "scores"}
        if unknown:
            raise UsageError(f"{path}: unknown keys {sorted(unknown)}")
        cfg.update({k.replace("-", "_"): v for k, v in data.items()})
    cfg.update({k: v for k, v in vars(args).items() if v is not None})
    return cfg


def config_hash(cfg: dict) -> str:
    sem = {k: v for k, v in cfg.items() if k not in _NON_SEMANTIC}
    return hashlib.sha256(json.dumps(sem, sort_keys=True, default=str).encode()).hexdigest()


def kernel_configs(cfg: dict) -> dict[str, KernelConfig]:
    nl = bool(cfg["normalized_laplacian"])
    out = {
        "KLE_heat": KernelConfig.heat(cfg["t"], nl),
        "KLE_full": KernelConfig.full(cfg["t"], cfg["alpha"], normalized_laplacian=nl),
        "KLE_matern": KernelConfig.matern(cfg["nu"], cfg["kappa"], nl),
        "KLEc_heat": KernelConfig.heat(cfg["t"], nl),
    }
    for method, spec in (cfg.get("kernels") or {}).items():
        if method not in DEFAULT_CONFIGS:
            raise UsageError(f"no kernel is configurable for method {method!r}")
        out[method] = KernelConfig.from_dict(spec)
    return out


def make_provider(cfg: dict):
    kind = cfg["provider"]
    cache = cfg.get("cache")
    if kind == "mock":
        base = MockNli.from_jsonl(cfg["mock_rules"]) if cfg.get("mock_rules") else MockNli()
    elif kind == "http":
        if not cfg.get("endpoint"):
            raise UsageError("--endpoint is required for the http provider")
        base = HttpNli(cfg["endpoint"], timeout=float(cfg["timeout"]), model=cfg["nli_model"])
    elif kind == "file":
        if not cache or not Path(cache).exists():
            raise UsageError("the file provider needs an existing --cache file")
        return FileNli.load(cache, model=cfg["nli_model"])
    else:
        raise UsageError(f"unknown provider {kind!r}")
    return CachedNli(base, cache) if cache else base


def read_answer_sets(path) -> list[AnswerSet]:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"input file {path} does not exist")
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(AnswerSet.from_record(rec))
            except json.JSONDecodeError as exc:
                raise UsageError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            except ValidationError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    ids = [a.question_id for a in out]
    if len(set(ids)) != len(ids):
        raise UsageError(f"{path}: duplicate question ids")
    return out


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def dump_line(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n"


def write_manifest(path: Path, command: str, cfg: dict, provider, inputs: Sequence) -> None:
    man = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "version": __version__,
        "config": {k: v for k, v in cfg.items() if k not in ("func",)},
        "config_hash": config_hash(cfg),
        "seeds": {"seed": cfg.get("seed")},
        "provider": provider.identity if provider is not None else None,
        "inputs": {str(p): file_sha256(p) for p in inputs},
    }
    path.write_text(json.dumps(man, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def _outcome(n_fail: int, n_total: int, provider_fail: int) -> int:
    if n_fail == 0:
        return EXIT_OK
    if provider_fail == n_total:
        return EXIT_PROVIDER
    return EXIT_PARTIAL


# ---------------------------------------------------------------- commands


def _run_records(cfg: dict, work) -> tuple[list[dict], int, int]:
    sets = read_answer_sets(cfg["input"])
    workers = int(cfg["workers"])
    if workers < 1:
        raise UsageError("workers must be >= 1")

    def one(a: AnswerSet) -> dict:
        try:
            return work(a)
        except ProviderError as exc:
            return {"schema_version": SCHEMA_VERSION, "id": a.question_id, "error": f"provider: {exc}", "partial": True}
        except KLEError as exc:
            return {"schema_version": SCHEMA_VERSION, "id": a.question_id, "error": str(exc), "partial": True}

    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(one, sets))  # map keeps input order
    failed = [r for r in records if "error" in r]
    prov = sum(r["error"].startswith("provider:") for r in failed)
    return records, len(failed), prov


def cmd_score(cfg: dict) -> int:
    methods = list(cfg["methods"])
    configs = kernel_configs(cfg)
    provider = make_provider(cfg)
    shared = MemoNli(provider)

    def work(a: AnswerSet) -> dict:
        s = score_answer_set(
            a, shared, methods, configs, cfg["scheme"], bool(cfg["nli_include_question"]), cfg["prob_mode"]
        )
        rec = {
            "schema_version": SCHEMA_VERSION,
            "id": a.question_id,
            "question": a.question,
            "n_answers": len(a),
            "correct": a.correct,
            "extra": a.extra,
        }
        rec.update(s.to_record())
        return rec

    records, n_fail, n_prov = _run_records(cfg, work)
    _finish(cfg, "score", provider, records)
    return _outcome(n_fail, len(records), n_prov)


def cmd_cluster(cfg: dict) -> int:
    provider = make_provider(cfg)
    shared = MemoNli(provider)

    def work(a: AnswerSet) -> dict:
        c = bidirectional_cluster(a, shared, bool(cfg["nli_include_question"]))
        return {"schema_version": SCHEMA_VERSION, "id": a.question_id, **c.summary()}

    records, n_fail, n_prov = _run_records(cfg, work)
    _finish(cfg, "cluster", provider, records)
    return _outcome(n_fail, len(records), n_prov)


def _finish(cfg, command, provider, records) -> None:
    out = Path(cfg["output"])
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(dump_line(r))
    if isinstance(provider, CachedNli):
        provider.flush()
    write_manifest(out.with_name(out.name + ".manifest.json"), command, cfg, provider, [cfg["input"]])
    for r in records:
        if "error" in r:
            log.error("%s: %s", r["id"], r["error"])


def load_scores(path) -> tuple[dict[str, list[float]], list[bool]]:
    """Per-method score columns and labels from a scores file.

    Records without a label or that failed are dropped; methods missing on
    any remaining record are dropped for the whole scenario.
    """
    recs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                recs.append(json.loads(line))
    recs = [r for r in recs if "error" not in r and isinstance(r.get("correct"), bool)]
    if not recs:
        return {}, []
    methods = [m for m in recs[0]["scores"] if all(r["scores"].get(m) is not None for r in recs)]
    return {m: [r["scores"][m] for r in recs] for m in methods}, [r["correct"] for r in recs]


def cmd_evaluate(cfg: dict) -> int:
    paths = [Path(p) for p in cfg["scores"]]
    for p in paths:
        if not p.exists():
            raise UsageError(f"scores file {p} does not exist")
    reports = []
    for p in paths:
        scores, correct = load_scores(p)
        try:
            reports.append(
                evaluate_scenario(p.stem, scores, correct, int(cfg["resamples"]), int(cfg["seed"]))
            )
        except (DegenerateLabels, ValidationError) as exc:
            log.warning("scenario %s excluded: %s", p.stem, exc)
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    wins = []
    if reports:
        common = [m for m in reports[0].methods if all(m in r.results for r in reports)]
        if common:
            wins = [win_rate(reports, metric, common) for metric in ("auroc", "auarc")]
    write_reports_json(out / "reports.json", reports, wins)
    write_reports_csv(out / "reports.csv", reports)
    write_manifest(out / "manifest.json", "evaluate", cfg, None, paths)
    for w in wins:
        print(f"win rates ({w.metric}, {len(reports)} scenarios)")
        for i, m in enumerate(w.methods):
            print(f"  {m:>12s} " + " ".join(f"{x:5.2f}" for x in w.fractions[i]))
    return EXIT_OK if len(reports) == len(paths) else EXIT_PARTIAL


def cmd_ecp(cfg: dict) -> int:
    curves = []
    family = cfg["family"]
    for n in cfg["vertices"]:
        group = []
        for v in cfg["params"]:
            kc = KernelConfig.heat(float(v)) if family == "heat" else KernelConfig.matern(cfg["nu"], float(v))
            group.append(entropy_convergence_curve(int(n), kc, cfg["schedule"], int(cfg["seed"])))
        curves.extend(group)
        name = "t" if family == "heat" else "kappa"
        print(f"n_vertices={n} selected {name}={select_lengthscale(group, float(cfg['threshold']))}")
    out = Path(cfg["output"])
    out.parent.mkdir(parents=True, exist_ok=True)
    write_curves_csv(out, curves)
    write_manifest(out.with_name(out.name + ".manifest.json"), "ecp", cfg, None, [])
    return EXIT_OK


def load_schema(name: str) -> dict:
    """Published JSON schema for ``answers``, ``scores``, ``cluster`` or ``report`` files."""
    from importlib.resources import files

    return json.loads(files("kle").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8"))


# ---------------------------------------------------------------- parser


def _bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kle", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"kle {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", default=None)
    sub = p.add_subparsers(dest="command", required=True)

    def nli_opts(sp):
        sp.add_argument("--config", help="TOML file with option values")
        sp.add_argument("--input", help="answers JSONL")
        sp.add_argument("--output", help="output JSONL")
        sp.add_argument("--provider", choices=("mock", "file", "http"))
        sp.add_argument("--cache", help="NLI cache JSONL (read by file, extended by mock/http)")
        sp.add_argument("--endpoint")
        sp.add_argument("--timeout", type=float)
        sp.add_argument("--nli-model")
        sp.add_argument("--mock-rules", help="JSONL rule table for the mock provider")
        sp.add_argument("--nli-include-question", type=_bool, metavar="BOOL")
        sp.add_argument("--workers", type=int)

    sp = sub.add_parser("score", help="uncertainty scores per question")
    nli_opts(sp)
    sp.add_argument("--methods", nargs="+", choices=METHODS)
    sp.add_argument("--scheme", choices=("one-hot", "soft"))
    sp.add_argument("--prob-mode", choices=("likelihood", "discrete"))
    sp.add_argument("--t", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--nu", type=float)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--normalized-laplacian", type=_bool, metavar="BOOL")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("cluster", help="semantic clusters per question")
    nli_opts(sp)
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("evaluate", help="AUROC/AUARC reports and win rates")
    sp.add_argument("--config")
    sp.add_argument("--scores", nargs="+", help="scores JSONL files, one per scenario")
    sp.add_argument("--out-dir")
    sp.add_argument("--resamples", type=int)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("ecp", help="entropy convergence curves as CSV")
    sp.add_argument("--config")
    sp.add_argument("--output")
    sp.add_argument("--vertices", type=int, nargs="+")
    sp.add_argument("--family", choices=("heat", "matern"))
    sp.add_argument("--params", type=float, nargs="+", help="t (heat) or kappa (Matérn) grid")
    sp.add_argument("--nu", type=float)
    sp.add_argument("--schedule", choices=("sequential", "random"))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threshold", type=float)
    sp.set_defaults(func=cmd_ecp)
    return p


_REQUIRED = {"score": ("input", "output"), "cluster": ("input", "output"), "evaluate": ("scores", "out_dir"), "ecp": ("output",)}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        missing = [k for k in _REQUIRED[args.command] if not cfg.get(k)]
        if missing:
            raise UsageError(f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")
        return args.func(cfg)
    except ValidationError as exc:
        print(f"kle: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ProviderError as exc:
        print(f"kle: provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER


if __name__ == "__main__":
    sys.exit(main())

