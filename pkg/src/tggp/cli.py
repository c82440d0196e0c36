"""Command-line interface: ``tggp <subcommand> [options]``.

Exit codes: 0 when every check passes, 1 on any failure, 2 when a
campaign is inconclusive or the input is invalid.
"""
from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    DEFAULT_BOUNDS,
    fourier_selftest,
    gen_beta_minus_instance,
    gen_matched_pair,
    verify_fl,
    verify_split,
    verify_vanishing,
)
from .localfield import LocalField
from .matalg import mat_from_json
from .orbint import DEFAULT_BUDGET, orb_gl_unramified, orb_u_unramified
from .orbitspace import (
    GLOrbitRep,
    MTriple,
    UOrbitRep,
    gl_to_mtriple,
    invariants,
    orbits_match,
    transfer_factor,
    u_to_mtriple,
)


class InputError(ValueError):
    pass


def _load_json(path: str):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _field_from(args, cfg: dict, split_default: bool = False) -> LocalField:
    obj = dict(cfg)
    if args.p is not None:
        obj["p"] = args.p
    obj.setdefault("p", 3)
    obj.setdefault("split", split_default)
    try:
        return LocalField.from_json(obj)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"inconsistent configuration: {exc}") from exc


def _triple_from(field: LocalField, obj: dict) -> MTriple:
    if "triple" in obj:
        t = obj["triple"]
        return MTriple(*(mat_from_json(field, t[k]) for k in ("xi", "x", "y")))
    if "gl" in obj:
        return gl_to_mtriple(GLOrbitRep.from_json(field, obj["gl"]))
    if "u" in obj:
        return u_to_mtriple(UOrbitRep.from_json(field, obj["u"]))
    raise InputError("input needs one of the keys 'triple', 'gl' or 'u'")


def _emit(args, payload: dict):
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.json_out:
        with open(args.json_out, "w") as fh:
            fh.write(text + "\n")


def _bounds(args, cfg: dict) -> dict:
    b = {**DEFAULT_BOUNDS, **cfg.get("bounds", {})}
    if args.bound is not None:
        b["val_lo"], b["val_hi"] = -args.bound, args.bound
    return b


def _setting(args, cfg: dict, name: str, default):
    v = getattr(args, name)
    if v is not None:
        return v
    return cfg.get(name, default)


# ---------------------------------------------------------------------------
# subcommands


def cmd_invariants(args, cfg):
    obj = _load_json(args.input)
    field = _field_from(args, obj.get("config", cfg))
    a, b = invariants(_triple_from(field, obj))
    _emit(args, {"a": [x.to_json() for x in a], "b": [x.to_json() for x in b]})
    return 0


def cmd_match(args, cfg):
    obj = _load_json(args.input)
    field = _field_from(args, obj.get("config", cfg))
    if "gl" not in obj or "u" not in obj:
        raise InputError("match needs both 'gl' and 'u'")
    res = orbits_match(GLOrbitRep.from_json(field, obj["gl"]), UOrbitRep.from_json(field, obj["u"]))
    _emit(args, {"match": res})
    return 0


def cmd_transfer_factor(args, cfg):
    obj = _load_json(args.input)
    field = _field_from(args, obj.get("config", cfg))
    _emit(args, {"transfer_factor": transfer_factor(field, _triple_from(field, obj)).to_json()})
    return 0


def cmd_orb_gl(args, cfg):
    obj = _load_json(args.input)
    field = _field_from(args, obj.get("config", cfg))
    rep = GLOrbitRep.from_json(field, obj["gl"])
    res = orb_gl_unramified(field, rep, obj.get("d", 0), s_formal=args.formal, budget=args.budget)
    _emit(args, res.to_json())
    return 0 if res.complete else 2


def cmd_orb_u(args, cfg):
    obj = _load_json(args.input)
    field = _field_from(args, obj.get("config", cfg))
    rep = UOrbitRep.from_json(field, obj["u"])
    res = orb_u_unramified(field, rep, obj.get("d", 0), budget=args.budget)
    _emit(args, res.to_json())
    return 0 if res.complete else 2


def _report(args, rep):
    _emit(args, rep.to_json(timing=args.timing))
    print(rep.summary(), file=sys.stderr)
    return rep.exit_code


def cmd_verify_fl(args, cfg):
    field = _field_from(args, cfg)
    n = _setting(args, cfg, "n", 1)
    rep = verify_fl(field, n, _setting(args, cfg, "count", 10), _setting(args, cfg, "seed", 0), _bounds(args, cfg), args.budget)
    return _report(args, rep)


def cmd_verify_vanishing(args, cfg):
    field = _field_from(args, cfg)
    n = _setting(args, cfg, "n", 1)
    rep = verify_vanishing(field, n, _setting(args, cfg, "count", 10), _setting(args, cfg, "seed", 0), _bounds(args, cfg), args.budget)
    return _report(args, rep)


def cmd_verify_split(args, cfg):
    cfg = {**cfg, "split": True}
    cfg.setdefault("mu_p", 1)
    field = _field_from(args, cfg, split_default=True)
    n = _setting(args, cfg, "n", 1)
    if n not in (1, 2):
        raise InputError("split campaigns run at n = 1 (with the n = 2 delta cases)")
    rep = verify_split(field, _setting(args, cfg, "count", 10), _setting(args, cfg, "seed", 0), not args.no_n2, args.budget)
    return _report(args, rep)


def cmd_fourier_selftest(args, cfg):
    p = args.p if args.p is not None else cfg.get("p", 3)
    rep = fourier_selftest(_setting(args, cfg, "count", 20), _setting(args, cfg, "seed", 0), p)
    return _report(args, rep)


def cmd_gen_instance(args, cfg):
    field = _field_from(args, cfg)
    n = _setting(args, cfg, "n", 1)
    seed = _setting(args, cfg, "seed", 0)
    gen = gen_beta_minus_instance if args.beta_minus else gen_matched_pair
    inst = gen(field, n, seed, _bounds(args, cfg))
    _emit(args, inst.to_json())
    return 0


COMMANDS = {
    "invariants": (cmd_invariants, "invariants (a, b) of a triple, GL or unitary orbit"),
    "match": (cmd_match, "whether a GL orbit and a unitary orbit match"),
    "transfer-factor": (cmd_transfer_factor, "the transfer factor of a triple or GL orbit"),
    "orb-gl": (cmd_orb_gl, "unramified GL-side orbital integral"),
    "orb-u": (cmd_orb_u, "unramified unitary-side orbital integral"),
    "verify-fl": (cmd_verify_fl, "fundamental lemma campaign"),
    "verify-vanishing": (cmd_verify_vanishing, "vanishing campaign for the non-split form"),
    "verify-split": (cmd_verify_split, "split transfer campaign"),
    "fourier-selftest": (cmd_fourier_selftest, "Fourier identities on random lattice functions"),
    "gen-instance": (cmd_gen_instance, "generate a matched FL instance"),
}

NEEDS_INPUT = {"invariants", "match", "transfer-factor", "orb-gl", "orb-u"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tggp", description="Exact local orbital integrals for the twisted GGP relative trace formula.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--p", type=int, default=None, help="residue characteristic")
        sp.add_argument("--n", type=int, default=None, help="rank")
        sp.add_argument("--count", type=int, default=None, help="number of instances")
        sp.add_argument("--seed", type=int, default=None, help="campaign seed")
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="coset enumeration budget")
        sp.add_argument("--bound", type=int, default=None, help="invariant valuations lie in [-bound, bound]")
        sp.add_argument("--json-out", default=None, help="also write the JSON output to this file")
        sp.add_argument("--config", default=None, help="JSON configuration file")
        sp.add_argument("--timing", action="store_true", help="include elapsed time in reports")
        if name in NEEDS_INPUT:
            sp.add_argument("input", help="JSON input file")
        if name == "orb-gl":
            sp.add_argument("--formal", action="store_true", help="keep the formal variable t = q^-(s-1/2)")
        if name == "gen-instance":
            sp.add_argument("--beta-minus", action="store_true", help="use the non-split skew-Hermitian form")
        if name == "verify-split":
            sp.add_argument("--no-n2", action="store_true", help="skip the n = 2 delta cases")
    return parser


def cli_main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_json(args.config) if args.config else {}
        if not isinstance(cfg, dict):
            raise InputError("the configuration file must hold a JSON object")
        return COMMANDS[args.command][0](args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
