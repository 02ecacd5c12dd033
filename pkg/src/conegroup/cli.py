"""Command-line interface: ``conegroup <command> [options]``.

Every command prints one JSON document with the keys ``version``,
``command``, ``params`` and ``result``.  Exit codes: 0 holds / passed /
member, 1 violated / outside / not positive, 2 inconclusive, 3 bad input
(message on standard error).
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .cones import Verdict, cone_to_dict, dual, member
from .eventual import CheckVerdict, Notion, check, classify_eventual_positivity
from .files import dumps, load_cone, load_matrix, load_vector
from .gallery import EXAMPLE_IDS, verify
from .linalg import expm

EXIT_OK, EXIT_VIOLATED, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _parser():
    p = _Parser(prog="conegroup", description="Eventual cone invariance of matrix semigroups.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("classify", help="spectral test for eventual positivity")
    c.add_argument("--matrix", required=True)
    c.add_argument("--cone", required=True)
    c.add_argument("--tol", type=float, default=1e-9)

    c = sub.add_parser("check", help="grid-based check of one notion")
    c.add_argument("--notion", required=True,
                   help="one of " + ", ".join(n.cli_name for n in Notion))
    c.add_argument("--matrix", required=True)
    c.add_argument("--cone", required=True)
    c.add_argument("--t-max", type=float, default=100.0)
    c.add_argument("--step", type=float, default=0.05)
    c.add_argument("--samples", type=int, default=200)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--tol", type=float, default=1e-9)

    c = sub.add_parser("member", help="membership of a vector in a cone")
    c.add_argument("--cone", required=True)
    c.add_argument("--vector", required=True)
    c.add_argument("--tol", type=float, default=1e-9)

    c = sub.add_parser("dual", help="dual cone spec")
    c.add_argument("--cone", required=True)

    c = sub.add_parser("expm", help="matrix exponential e^{tA}")
    c.add_argument("--matrix", required=True)
    c.add_argument("--t", type=float, default=1.0)

    c = sub.add_parser("reproduce", help="verify a worked example")
    c.add_argument("--example", required=True, choices=EXAMPLE_IDS)
    c.add_argument("--n-max", type=int, default=None)
    c.add_argument("--seed", type=int, default=None)
    return p


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CONEGROUP_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"CONEGROUP_SEED: not an integer: {env!r}") from None


def _run(args):
    cmd = args.command
    if cmd == "classify":
        params = {"matrix": args.matrix, "cone": args.cone, "tol": args.tol}
        cert = classify_eventual_positivity(load_matrix(args.matrix), load_cone(args.cone),
                                            args.tol)
        return params, cert.to_dict(), EXIT_OK if cert.positive else EXIT_VIOLATED
    if cmd == "check":
        notion = Notion.parse(args.notion)
        seed = _seed(args)
        params = {"notion": notion.cli_name, "matrix": args.matrix, "cone": args.cone,
                  "t_max": args.t_max, "step": args.step, "samples": args.samples,
                  "seed": seed, "tol": args.tol}
        rep = check(notion, load_matrix(args.matrix), load_cone(args.cone), t_max=args.t_max,
                    step=args.step, samples=args.samples, seed=seed, tol=args.tol)
        code = {CheckVerdict.HOLDS: EXIT_OK, CheckVerdict.VIOLATED: EXIT_VIOLATED,
                CheckVerdict.INCONCLUSIVE: EXIT_INCONCLUSIVE}[rep.verdict]
        return params, rep.to_dict(), code
    if cmd == "member":
        params = {"cone": args.cone, "vector": args.vector, "tol": args.tol}
        m = member(load_cone(args.cone), load_vector(args.vector), args.tol)
        if m.inconclusive:
            code = EXIT_INCONCLUSIVE
        else:
            code = EXIT_VIOLATED if m.verdict is Verdict.OUTSIDE else EXIT_OK
        return params, m.to_dict(), code
    if cmd == "dual":
        return {"cone": args.cone}, cone_to_dict(dual(load_cone(args.cone))), EXIT_OK
    if cmd == "expm":
        params = {"matrix": args.matrix, "t": args.t}
        return params, expm(load_matrix(args.matrix), args.t), EXIT_OK
    if cmd == "reproduce":
        kwargs = {}
        params = {"example": args.example}
        if args.n_max is not None:
            if args.example != "3.1":
                raise InputError("--n-max applies to example 3.1 only")
            kwargs["n_max"] = params["n_max"] = args.n_max
        if args.example not in ("A.1", "A.3"):
            kwargs["seed"] = params["seed"] = _seed(args)
        rep = verify(args.example, **kwargs)
        return params, rep.to_dict(), EXIT_OK if rep.passed else EXIT_VIOLATED
    raise InputError(f"unknown command {cmd!r}")


def run(argv=None, stdout=None, stderr=None):
    """Execute one command; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = _parser().parse_args(argv)
        params, result, code = _run(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (InputError, ValueError, TypeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    doc = {"version": __version__, "command": args.command, "params": params, "result": result}
    print(dumps(doc), file=stdout)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
