"""Command-line front end: ``chsh-qkd {bound,run,attack,sweep,fluctuation}``.

Exit codes: 0 success/accept, 2 usage or domain error, 3 protocol reject,
4 insufficient data.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import attack, protocol, stats
from .boxes import honest_box
from .quantum import bell_phi_plus

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REJECT = 3
EXIT_INSUFFICIENT = 4

DEFAULT_SWEEP_N = (10_000, 100_000, 1_000_000, 10_000_000)
DEFAULT_FLUCTUATION_N = (2, 4, 10, 100, 1000, 10_000)


@dataclass(frozen=True)
class RunConfig:
    mode: str = "DI"
    n_rounds: int = 100_000
    trials: int = 1000
    s_min: float = 2.5
    replacement_probability: float = 0.0
    bias_z_threshold: float = 5.0
    seed: int = 0
    output_path: str = ""
    output_format: str = "json"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.mode not in ("DI", "DD"):
            raise ValueError(f"mode must be DI or DD, got {self.mode!r}")
        if self.output_format not in ("json", "csv"):
            raise ValueError(f"format must be json or csv, got {self.output_format!r}")
        if self.n_rounds < 1 or self.trials < 1 or self.workers < 1:
            raise ValueError("rounds, trials and workers must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not 0.0 <= self.replacement_probability <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        stats.AcceptancePolicy(self.s_min, bias_z_threshold=self.bias_z_threshold)

    def policy(self) -> stats.AcceptancePolicy:
        # With known measurements the per-correlator check is part of acceptance.
        mode = stats.PolicyMode.THRESHOLD_PLUS_BIAS if self.mode == "DD" else stats.PolicyMode.THRESHOLD_ONLY
        return stats.AcceptancePolicy(self.s_min, mode, self.bias_z_threshold)

    def attack_config(self) -> attack.AttackConfig:
        return attack.AttackConfig(self.replacement_probability, mode=protocol.Mode(self.mode))

    def to_text(self) -> str:
        return "".join(f"{_FIELD_TO_KEY[f.name]}={getattr(self, f.name)}\n" for f in fields(self))

    @classmethod
    def from_text(cls, text: str) -> RunConfig:
        return cls(**parse_config_text(text))


# Config-file keys mirror the command-line flags.
_FIELD_TO_KEY = {
    "mode": "mode",
    "n_rounds": "rounds",
    "trials": "trials",
    "s_min": "s-min",
    "replacement_probability": "p",
    "bias_z_threshold": "bias-z",
    "seed": "seed",
    "output_path": "out",
    "output_format": "format",
    "workers": "workers",
}
_KEY_TO_FIELD = {v: k for k, v in _FIELD_TO_KEY.items()}
_FIELD_TYPES = {f.name: type(f.default) for f in fields(RunConfig)}


def parse_config_text(text: str) -> dict:
    """Flat ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        name = _KEY_TO_FIELD.get(key.lstrip("-").replace("_", "-"))
        if name is None:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        out[name] = _FIELD_TYPES[name](value)
    return out


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, float):
        return "nan" if math.isnan(x) else format(x, ".6g")
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, path: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _int_list(text: str) -> list[int]:
    return [int(float(tok)) for tok in text.split(",") if tok.strip()]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chsh-qkd", description="CHSH-based QKD attack simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser("bound", help="maximal replacement probability for a CHSH threshold")
    p_bound.add_argument("--s-min", type=float, default=2.5)
    p_bound.add_argument("--s-n", type=float, default=stats.TSIRELSON)
    p_bound.add_argument("--per-kind", action="store_true", help="print the probability for each of X1..X4")

    for name, help_ in (("run", "one protocol session"), ("attack", "Monte Carlo over attacked sessions")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--mode", choices=("DI", "DD"))
        p.add_argument("--rounds", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--s-min", type=float)
        p.add_argument("--p", type=float)
        p.add_argument("--bias-z", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--workers", type=int)

    p_sweep = sub.add_parser("sweep", help="S_min and p_max as functions of n")
    p_sweep.add_argument("--n", type=_int_list, default=list(DEFAULT_SWEEP_N))
    p_sweep.add_argument("--alpha", type=float, default=0.01)
    p_sweep.add_argument("--s-n", type=float, default=stats.TSIRELSON)
    p_sweep.add_argument("--seed", type=int, default=0, help="accepted for uniformity; the sweep is deterministic")
    p_sweep.add_argument("--out", default="")
    p_sweep.add_argument("--format", choices=("json", "csv"), default="csv")

    p_fl = sub.add_parser("fluctuation", help="fair-coin perfect-split probabilities")
    p_fl.add_argument("--n", type=_int_list, default=list(DEFAULT_FLUCTUATION_N))
    p_fl.add_argument("--seed", type=int, default=0, help="accepted for uniformity; the analysis is deterministic")
    p_fl.add_argument("--out", default="")
    p_fl.add_argument("--format", choices=("json", "csv"), default="csv")
    return parser


_FLAG_TO_FIELD = {
    "mode": "mode",
    "rounds": "n_rounds",
    "trials": "trials",
    "s_min": "s_min",
    "p": "replacement_probability",
    "bias_z": "bias_z_threshold",
    "seed": "seed",
    "out": "output_path",
    "format": "output_format",
    "workers": "workers",
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values.update(parse_config_text(Path(args.config).read_text(encoding="utf-8")))
    for flag, name in _FLAG_TO_FIELD.items():
        v = getattr(args, flag)
        if v is not None:
            values[name] = v
    return RunConfig(**values)


def _result_config(cfg: RunConfig) -> dict:
    # Output location and worker count never affect results, so they stay out of them.
    d = asdict(cfg)
    del d["output_path"], d["workers"]
    return d


def cmd_bound(args) -> int:
    p = attack.max_replacement_probability(args.s_min, args.s_n)
    print(f"{p / 4 if args.per_kind else p:.6f}")
    return EXIT_OK


def cmd_run(cfg: RunConfig) -> int:
    policy = cfg.policy()
    if cfg.replacement_probability > 0:
        source = attack.attacked_box_source(cfg.attack_config())
    else:
        source = honest_box(bell_phi_plus())
    try:
        res = protocol.run_session(cfg.mode, source, cfg.n_rounds, policy, cfg.seed)
    except stats.InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    if cfg.output_format == "json":
        _emit(_json_text({"config": _result_config(cfg), "result": res.to_dict()}), cfg.output_path)
    else:
        header = ("accepted", "s_hat", "std_error", "rounds", "key_rounds", "test_rounds", "leaked_bits", "agreement")
        agreement = protocol.key_agreement_rate(res) if res.key_rounds else math.nan
        row = (res.accepted, res.chsh.s_hat, res.chsh.std_error, res.rounds, res.key_rounds, res.test_rounds,
               len(res.leaked_positions), agreement)
        _emit(_csv_text(header, [row]), cfg.output_path)
    return EXIT_OK if res.accepted else EXIT_REJECT


def cmd_attack(cfg: RunConfig) -> int:
    outcome = attack.simulate_attack(cfg.attack_config(), cfg.n_rounds, cfg.trials, cfg.policy(), cfg.seed, workers=cfg.workers)
    summary = outcome.summary()
    if cfg.output_format == "json":
        doc = {"config": _result_config(cfg), "summary": summary, "trials": [asdict(r) for r in outcome.rows]}
        _emit(_json_text(doc), cfg.output_path)
    else:
        rows = [tuple(getattr(r, c) for c in attack.TRIAL_COLUMNS) for r in outcome.rows]
        _emit(_csv_text(attack.TRIAL_COLUMNS, rows), cfg.output_path)
        summary_text = _json_text({"config": _result_config(cfg), "summary": summary})
        if cfg.output_path:
            Path(cfg.output_path + ".summary.json").write_text(summary_text, encoding="utf-8")
        else:
            sys.stderr.write(summary_text)
    if any(r.insufficient_data for r in outcome.rows):
        return EXIT_INSUFFICIENT
    return EXIT_OK


def cmd_sweep(args) -> int:
    rows = attack.tradeoff_sweep(args.n, args.alpha, args.s_n)
    if args.format == "csv":
        _emit(_csv_text(attack.SWEEP_COLUMNS, [tuple(asdict(r).values()) for r in rows]), args.out)
    else:
        _emit(_json_text({"alpha": args.alpha, "s_n": args.s_n, "rows": [asdict(r) for r in rows]}), args.out)
    return EXIT_OK


def cmd_fluctuation(args) -> int:
    report = stats.fluctuation_report(args.n)
    if args.format == "json":
        _emit(_json_text(report), args.out)
        return EXIT_OK
    r = report["ratio"]
    rows = [("perfect_ratio_probability", row["n"], row["n"] // 2, row["perfect_ratio_probability"]) for row in report["rows"]]
    rows += [
        ("p_k", r["n"], r["k"], r["p_k"]),
        ("p_half", r["n"], r["n"] // 2, r["p_half"]),
        ("ratio_p_k_over_p_half", r["n"], r["k"], r["ratio"]),
        ("log_ratio_p_k_over_p_half", r["n"], r["k"], r["log_ratio"]),
    ]
    _emit(_csv_text(("quantity", "n", "k", "value"), rows), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bound":
            return cmd_bound(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "fluctuation":
            return cmd_fluctuation(args)
        cfg = config_from_args(args)
        return cmd_run(cfg) if args.command == "run" else cmd_attack(cfg)
    except stats.InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
