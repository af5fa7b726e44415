#!/usr/bin/env python3
"""Stand-in verifier with scripted behavior, printing Boogie-style summaries.

Usage: mock_verifier.py --behavior B [options] FILE...

Behaviors:
  always-verify      report every file verified, exit 0
  always-fail        report a postcondition failure, exit 1
  fail-on-marker     fail when any input contains --marker (escapes such as
                     \\n are decoded); --fail-mode picks a verification
                     failure or a type error
  sleep-then-verify  sleep --sleep seconds, then verify
  flaky-timeout      hang for the first --flakes invocations counted in the
                     --counter file, then verify

Only the standard library is used so the script runs under any interpreter.
"""

import argparse
import codecs
import os
import sys
import time

HANG_SECONDS = 3600.0


def _verified(files):
    print(f"Boogie program verifier finished with {len(files)} verified, 0 errors")
    return 0


def _failed(files):
    print(f"{files[0]}(1,1): Error: A postcondition might not hold on this return path.")
    print(f"Boogie program verifier finished with {max(len(files) - 1, 0)} verified, 1 error")
    return 1


def _type_error(files):
    print(f"{files[0]}(1,1): Error: invalid argument types to an operator of this type")
    print(f"1 type checking errors detected in {files[0]}")
    return 2


def _bump(counter):
    """Increment the on-disk counter and return its previous value."""
    try:
        with open(counter, encoding="utf-8") as fh:
            n = int(fh.read().strip() or 0)
    except FileNotFoundError:
        n = 0
    with open(counter, "w", encoding="utf-8") as fh:
        fh.write(str(n + 1))
    return n


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--behavior", required=True,
                    choices=["always-verify", "always-fail", "fail-on-marker", "sleep-then-verify", "flaky-timeout"])
    ap.add_argument("--marker", default="")
    ap.add_argument("--fail-mode", choices=["verification", "type-error"], default="verification")
    ap.add_argument("--sleep", type=float, default=HANG_SECONDS)
    ap.add_argument("--counter")
    ap.add_argument("--flakes", type=int, default=0)
    ap.add_argument("--log", help="append one line per invocation")
    ap.add_argument("files", nargs="+")
    args = ap.parse_args(argv)

    if args.log:
        with open(args.log, "a", encoding="utf-8") as fh:
            fh.write(" ".join(args.files) + "\n")
    texts = []
    for f in args.files:
        with open(f, encoding="utf-8") as fh:
            texts.append(fh.read())
    sys.stdout.flush()

    b = args.behavior
    if b == "always-verify":
        return _verified(args.files)
    if b == "always-fail":
        return _failed(args.files)
    if b == "fail-on-marker":
        marker = codecs.decode(args.marker, "unicode_escape")
        if marker and any(marker in t for t in texts):
            return _failed(args.files) if args.fail_mode == "verification" else _type_error(args.files)
        return _verified(args.files)
    if b == "sleep-then-verify":
        time.sleep(args.sleep)
        return _verified(args.files)
    if b == "flaky-timeout":
        if args.counter is None:
            ap.error("flaky-timeout needs --counter")
        if _bump(args.counter) < args.flakes:
            time.sleep(HANG_SECONDS)
        return _verified(args.files)
    return 64


if __name__ == "__main__":
    sys.exit(main())
