"""Command-line front end: ``qkdcrit evaluate | simulate | verify``.

Exit codes: 0 success, 1 I/O error, 2 validation error, 64 usage error.
Options may also come from ``--config`` (JSON or TOML, keys named like the
long flags without dashes); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import audit, suites
from .criteria import DEFAULT_EXPONENT
from .errors import ConfigInvalid, DimensionCap, EmptyKey, OutOfRange, ParseError, QkdCritError, UnknownSuite
from .protocol import MAX_MEMORY_BITS, SimConfig, estimate_p_abort, full_pipeline_assessment, run_bb84

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_USAGE = 0, 1, 2, 64

log = logging.getLogger("qkdcrit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_exponent(text: str) -> float:
    try:
        value = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}") from None
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"exponent {text} outside (0, 1]")
    return value


# option name -> (type converter, default); shared by flags and --config
OPTIONS = {
    "input": (str, None),
    "output": (str, None),
    "format": (str, None),
    "seed": (int, None),
    "trials": (int, 0),
    "jobs": (int, 1),
    "exponent": (parse_exponent, DEFAULT_EXPONENT),
    "samples": (int, None),
}

HELP = {
    "input": "claims file (CSV or JSON) or simulation config (JSON or TOML)",
    "output": "report file, or artifact directory for simulate",
    "format": "report format (default: from the output suffix, else csv)",
    "seed": "RNG seed, overrides the config value",
    "trials": "Monte Carlo trials for the abort estimate (0 or at least 100)",
    "jobs": "worker threads",
    "exponent": "Markov level exponent, e.g. 1/3",
    "samples": "number of random instances per suite",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qkdcrit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, names):
        p.add_argument("--config", help="JSON or TOML file of option defaults")
        for name in names:
            conv, _ = OPTIONS[name]
            kwargs = {"default": None, "type": conv, "help": HELP[name]}
            if name == "format":
                kwargs["choices"] = ("csv", "json")
            p.add_argument(f"--{name}", **kwargs)

    ev = sub.add_parser("evaluate", help="re-evaluate claimed (n, epsilon_sec) parameters")
    common(ev, ("input", "output", "format", "jobs", "exponent"))

    sim = sub.add_parser("simulate", help="run a seeded BB84 simulation and write artifacts")
    common(sim, ("input", "output", "seed", "trials", "jobs"))

    ver = sub.add_parser("verify", help="run an inequality property suite")
    ver.add_argument("suite", choices=tuple(suites.SUITES) + ("all",))
    common(ver, ("samples", "seed", "jobs", "format"))
    return parser


def load_option_file(path: str) -> dict:
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigInvalid(f"{path}: {exc}") from None
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigInvalid(f"{path}: expected a table of options")
    return data


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, ``--config`` values and explicit flags, in increasing priority."""
    names = [n for n in OPTIONS if hasattr(args, n)]
    opts = {n: OPTIONS[n][1] for n in names}
    if args.config:
        for key, value in load_option_file(args.config).items():
            if key not in names:
                raise ConfigInvalid(f"{args.config}: option {key!r} not valid for {args.command}")
            conv = OPTIONS[key][0]
            try:
                opts[key] = conv(str(value)) if conv is parse_exponent else conv(value)
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigInvalid(f"{args.config}: {key}: {exc}") from None
    for n in names:
        value = getattr(args, n)
        if value is not None:
            opts[n] = value
    if opts.get("jobs") is not None and opts["jobs"] < 1:
        raise UsageError("--jobs must be at least 1")
    return opts


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def cmd_evaluate(opts: dict) -> int:
    if not opts["input"]:
        raise UsageError("evaluate needs --input")
    parsed = audit.read_claims(opts["input"])
    report = audit.run_audit(parsed, opts["exponent"], opts["jobs"])
    fmt = opts["format"]
    if fmt is None:
        fmt = "json" if opts["output"] and opts["output"].lower().endswith(".json") else "csv"
    text = report.render(fmt)
    if opts["output"]:
        _write(Path(opts["output"]), text)
    else:
        sys.stdout.write(text)
    for rej in report.rejects:
        log.warning("rejected line %d: %s", rej.line, rej.reason)
    return EXIT_VALIDATION if report.rejects else EXIT_OK


def simulation_artifacts(config: SimConfig, trials: int = 0, jobs: int = 1) -> dict[str, str]:
    """File name -> contents for one simulation; pure, so outputs can be compared byte for byte."""
    config.validate(exact=True)
    if trials:
        if trials < 100:
            raise ConfigInvalid("--trials must be 0 or at least 100")
    run = run_bb84(config)
    files = {
        "run.json": _dump(run.to_dict()),
        "transcript.txt": "\n".join(run.transcript) + "\n",
    }
    if len(run.sifted_key) <= MAX_MEMORY_BITS:
        res = full_pipeline_assessment(config)
        files["assessment.json"] = _dump(
            {
                "pre_privacy_amplification": res.pre_pa.to_dict(),
                "post_privacy_amplification": res.post_pa.to_dict(),
                "rates": res.rates.to_dict(),
            }
        )
        files["eve_memory.json"] = _dump(
            {"pre_privacy_amplification": run.eve_memory.to_json(), "post_privacy_amplification": res.hashed_memory.to_json()}
        )
    else:
        files["assessment.json"] = _dump(
            {
                "skipped": True,
                "reason": f"sifted key has {len(run.sifted_key)} bits; exact assessment is limited to {MAX_MEMORY_BITS}",
            }
        )
        files["eve_memory.json"] = _dump(
            {"model": "product of per-bit classical records", "factors": list(run.memory_kinds)}
        )
    if trials:
        est = estimate_p_abort(config, trials, jobs)
        files["p_abort.json"] = _dump(est._asdict())
    return files


def cmd_simulate(opts: dict) -> int:
    if not opts["input"]:
        raise UsageError("simulate needs --input (a SimConfig file)")
    if not opts["output"]:
        raise UsageError("simulate needs --output (a directory)")
    config = SimConfig.from_file(opts["input"])
    if opts["seed"] is not None:
        config = SimConfig.from_dict({**config.to_dict(), "rng_seed": opts["seed"]})
    files = simulation_artifacts(config, opts["trials"], opts["jobs"])
    out = Path(opts["output"])
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        _write(out / name, text)
    log.info("wrote %s to %s", ", ".join(files), out)
    return EXIT_OK


def cmd_verify(suite: str, opts: dict) -> int:
    results = suites.run_suites(suite, opts["samples"], opts["seed"] or 0, opts["jobs"])
    if opts.get("format") == "json":
        sys.stdout.write(_dump([r._asdict() | {"passed": r.passed} for r in results]))
    else:
        for r in results:
            print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def main(argv=None) -> int:
    level = os.environ.get("QKDCRIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        if args.command == "evaluate":
            return cmd_evaluate(opts)
        if args.command == "simulate":
            return cmd_simulate(opts)
        return cmd_verify(args.suite, opts)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qkdcrit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownSuite as exc:
        print(f"qkdcrit: unknown suite {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"qkdcrit: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ParseError, ConfigInvalid, DimensionCap, OutOfRange, EmptyKey, QkdCritError) as exc:
        print(f"qkdcrit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
