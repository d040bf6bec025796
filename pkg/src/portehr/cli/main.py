"""``portehr`` command line. Every command prints one JSON document on stdout.

Exit codes: 0 success, 1 expectation failure or operational error,
2 scenario parse or step failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..consent import audit_log
from ..crypto import KeyShare, ShamirParams, SigningKeyPair, derive_child_key, from_hex, pseudonym_of
from ..crypto import shamir_reconstruct, shamir_split
from ..crypto.keys import root_from_seed
from ..errors import PortEHRError, ScenarioParseError, StepFailure
from ..ledger import read_chain, validate_chain
from .scenario import execute, export_world, load_scenario

EXIT_OK, EXIT_FAIL, EXIT_STEP, EXIT_USAGE = 0, 1, 2, 64

log = logging.getLogger("portehr")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2; usage errors are 64 here
        raise UsageError(f"{self.prog}: {message}")


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _error(code: str, message: str, **extra) -> dict:
    return {"error": code, "message": message, **extra}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="portehr", description="Portable, ledger-anchored health records.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    scen = sub.add_parser("scenario", help="run patient-story scenarios")
    scen_sub = scen.add_subparsers(dest="action", required=True, parser_class=_Parser)
    run = scen_sub.add_parser("run", help="run one scenario file")
    run.add_argument("file", type=Path)
    run.add_argument("--export-dir", type=Path, help="write chain, store, manifests and shares here")

    kg = sub.add_parser("keygen", help="derive a patient identity from a seed")
    kg.add_argument("--seed", type=int, required=True)
    kg.add_argument("--include-secret", action="store_true", help="also print the root key (handle with care)")

    sp = sub.add_parser("split", help="split a hex secret into k-of-n shares")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out-dir", type=Path, help="write share-<index>.json files here")
    sp.add_argument("secret")

    cb = sub.add_parser("combine", help="rebuild a secret from share files")
    cb.add_argument("files", nargs="+", type=Path)
    cb.add_argument("--k", type=int, help="threshold (default: number of files)")

    ch = sub.add_parser("chain", help="chain file tools")
    ch_sub = ch.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ver = ch_sub.add_parser("verify", help="validate a chain file")
    ver.add_argument("file", type=Path)
    ver.add_argument("--authorities", type=Path, help="authorities file (default: <stem>.authorities.json)")

    au = sub.add_parser("audit", help="consent events for a pseudonym")
    au.add_argument("chain", type=Path)
    au.add_argument("pseudonym")
    au.add_argument("--authorities", type=Path)
    return p


def _scenario_run(args) -> int:
    try:
        scenario = load_scenario(args.file)
        report, world = execute(scenario)
    except ScenarioParseError as exc:
        _emit(_error(exc.code, str(exc)))
        return EXIT_STEP
    except StepFailure as exc:
        _emit(_error(exc.code, str(exc), report=exc.report.to_json()))
        return EXIT_STEP
    if args.export_dir:
        export_world(world, report, args.export_dir)
    _emit(report.to_json())
    return EXIT_OK if report.passed else EXIT_FAIL


def _keygen(args) -> int:
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be in 0..2^64-1")
    root = root_from_seed(args.seed)
    signing = SigningKeyPair.from_secret(derive_child_key(root, "sign", 0).value)
    out = {"seed": args.seed, "public": signing.public.hex(), "pseudonym": pseudonym_of(signing.public)}
    if args.include_secret:
        out["root"] = root.value.hex()
    _emit(out)
    return EXIT_OK


def _split(args) -> int:
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be in 0..2^64-1")
    try:
        secret = bytes.fromhex(args.secret)
    except ValueError:
        raise UsageError("secret must be hex") from None
    shares = shamir_split(secret, ShamirParams(args.k, args.n), args.seed)
    out = {"k": args.k, "n": args.n, "shares": [s.to_json() for s in shares]}
    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        files = []
        for s in shares:
            path = args.out_dir / f"share-{s.index}.json"
            path.write_text(json.dumps(s.to_json()))
            files.append(str(path))
        out["files"] = files
    _emit(out)
    return EXIT_OK


def _combine(args) -> int:
    shares = []
    for path in args.files:
        try:
            shares.append(KeyShare.from_json(json.loads(path.read_text())))
        except (OSError, json.JSONDecodeError) as exc:
            _emit(_error("BadShareFile", f"{path}: {exc}"))
            return EXIT_FAIL
    secret = shamir_reconstruct(shares, args.k or len(shares))
    _emit({"secret": secret.hex(), "shares_used": len(shares)})
    return EXIT_OK


def _chain_verify(args) -> int:
    chain = read_chain(args.file, args.authorities)
    report = validate_chain(chain)
    _emit({**report.to_json(), "blocks": len(chain), "digest": chain.digest().hex()})
    return EXIT_OK if report.valid else EXIT_FAIL


def _audit(args) -> int:
    try:
        from_hex(args.pseudonym, 16)
    except ValueError:
        raise UsageError("pseudonym must be 32 lowercase hex characters") from None
    chain = read_chain(args.chain, args.authorities)
    _emit([e.to_json() for e in audit_log(chain, args.pseudonym)])
    return EXIT_OK


_COMMANDS = {
    ("scenario", "run"): _scenario_run,
    ("keygen", None): _keygen,
    ("split", None): _split,
    ("combine", None): _combine,
    ("chain", "verify"): _chain_verify,
    ("audit", None): _audit,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return _COMMANDS[(args.command, getattr(args, "action", None))](args)
    except UsageError as exc:
        sys.stderr.write(parser.format_usage())
        _emit(_error("UsageError", str(exc)))
        return EXIT_USAGE
    except PortEHRError as exc:
        _emit(_error(exc.code, str(exc), trust_property=exc.trust_property))
        return EXIT_FAIL
    except OSError as exc:
        _emit(_error("IOError", str(exc)))
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
