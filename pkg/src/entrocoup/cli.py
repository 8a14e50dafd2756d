"""Command-line entry point: ``entrocoup <subcommand> ...``.

Subcommands
    mec            couple two marginals read from files
    keygen         uniform key as hex
    stego-encode   hide a hex ciphertext in covertext symbols
    stego-decode   recover the ciphertext from stegotext
    fit            count-based n-gram model from a text corpus
    experiment     run a desk-scale experiment, emit CSV or JSON

Marginal files hold whitespace- or comma-separated probabilities; fractions
such as ``1/4`` are accepted.  Sequences are whitespace-separated symbol
indices.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import experiments
from .probcore import coupling_entropy, entropy, exact_mec, greedy_mec
from .seqmodel import NgramFormatError, dumps, fit, load_ngram, save
from .stego import VARIANTS, bits_from_hex, hex_from_bits, keygen, stego_decode, stego_encode


def read_marginal(path) -> np.ndarray:
    text = Path(path).read_text().replace(",", " ")
    try:
        vals = [float(Fraction(t)) for t in text.split()]
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"{path}: {e}") from None
    if not vals:
        raise ValueError(f"{path}: no probabilities")
    return np.array(vals)


def read_sequence(path) -> list[int]:
    text = sys.stdin.read() if str(path) == "-" else Path(path).read_text()
    try:
        return [int(t) for t in text.split()]
    except ValueError as e:
        raise ValueError(f"bad symbol index: {e}") from None


def _write(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        fields = list(rows[0])
        for r in rows[1:]:
            fields += [k for k in r if k not in fields]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


# -- subcommands ----------------------------------------------------------------


def cmd_mec(a) -> int:
    mu, nu = read_marginal(a.mu), read_marginal(a.nu)
    c = exact_mec(mu, nu) if a.exact else greedy_mec(mu, nu)
    d = c.to_dense()
    report = {
        "method": "exact" if a.exact else "greedy",
        "entries": [[i, j, v] for (i, j), v in sorted(c.entries.items())],
        "joint_entropy_bits": coupling_entropy(c),
        "entropy_mu": entropy(mu),
        "entropy_nu": entropy(nu),
        "row_residual_l1": float(np.abs(d.sum(axis=1) - mu).sum()),
        "col_residual_l1": float(np.abs(d.sum(axis=0) - nu).sum()),
    }
    if a.format == "json":
        _write(json.dumps(report, indent=1) + "\n", a.out)
    else:
        lines = ["row,col,prob"] + [f"{i},{j},{v!r}" for i, j, v in report["entries"]]
        lines += [f"# {k}={report[k]!r}" for k in
                  ("method", "joint_entropy_bits", "row_residual_l1", "col_residual_l1")]
        _write("\n".join(lines) + "\n", a.out)
    return 0


def cmd_keygen(a) -> int:
    _write(keygen(a.bits, a.seed) + "\n", a.out)
    return 0


def cmd_stego_encode(a) -> int:
    cover = load_ngram(a.cover)
    bits = bits_from_hex(a.cipher, a.bits)
    t = stego_encode(bits, cover, a.len, variant=a.variant, merge=a.merge, seed=a.seed,
                     component_bits=a.component_bits)
    _write(" ".join(map(str, t.stegotext)) + "\n", a.out)
    return 0


def cmd_stego_decode(a) -> int:
    cover = load_ngram(a.cover)
    y = read_sequence(a.stegotext)
    est, _ = stego_decode(y, cover, a.bits, variant=a.variant, merge=a.merge,
                          component_bits=a.component_bits)
    _write(hex_from_bits(est) + "\n", a.out)
    return 0


def cmd_fit(a) -> int:
    lines = Path(a.corpus).read_text(encoding="utf-8").splitlines()
    corpus = [ln.split() for ln in lines if ln.strip()]
    model = fit(corpus, a.order, eos=a.eos, add=a.add)
    if a.out in (None, "-"):
        sys.stdout.write(dumps(model))
    else:
        save(model, a.out)
    return 0


def cmd_experiment(a) -> int:
    cfg_cls, run = experiments.EXPERIMENTS[a.name]
    overrides = {"seed": a.seed}
    if a.trials is not None:
        overrides["trials"] = a.trials
    names = {f.name for f in dataclasses.fields(cfg_cls)}
    if a.variant is not None:
        if "variants" not in names:
            raise ValueError(f"experiment {a.name} has no variant choice")
        overrides["variants"] = (a.variant,)
    if a.merge is not None and "merge" in names:
        overrides["merge"] = a.merge
    cfg = cfg_cls(**overrides)
    rows, summary = run(cfg, workers=a.workers)
    if a.format == "json":
        doc = {"experiment": a.name, "config": dataclasses.asdict(cfg),
               "rows": rows, "summary": summary}
        _write(json.dumps(doc, indent=1) + "\n", a.out)
    else:
        _write(rows_to_csv(rows), a.out)
        summary_csv = rows_to_csv(summary)
        if a.out in (None, "-"):
            sys.stderr.write(summary_csv)
        else:
            Path(str(a.out) + ".summary.csv").write_text(summary_csv)
    return 0


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entrocoup", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, fmt=False):
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        if fmt:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    def coder(sp):
        sp.add_argument("--cover", required=True, help="n-gram covertext model file")
        sp.add_argument("--bits", type=int, required=True, help="ciphertext length in bits")
        sp.add_argument("--variant", choices=VARIANTS, default="arimec")
        sp.add_argument("--merge", action=argparse.BooleanOptionalAction, default=False)
        sp.add_argument("--component-bits", type=int, default=1)

    sp = sub.add_parser("mec", help="couple two marginals")
    sp.add_argument("mu")
    sp.add_argument("nu")
    sp.add_argument("--exact", action="store_true", help="exhaustive oracle (tiny inputs)")
    common(sp, fmt=True)
    sp.set_defaults(fn=cmd_mec)

    sp = sub.add_parser("keygen", help="uniform key as hex")
    sp.add_argument("--bits", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(fn=cmd_keygen)

    sp = sub.add_parser("stego-encode", help="hide a ciphertext")
    coder(sp)
    sp.add_argument("--cipher", required=True, help="ciphertext hex (MSB-first)")
    sp.add_argument("--len", type=int, required=True, help="stegotext length")
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(fn=cmd_stego_encode)

    sp = sub.add_parser("stego-decode", help="recover a ciphertext")
    coder(sp)
    sp.add_argument("stegotext", help="file of symbol indices, or - for stdin")
    sp.add_argument("--seed", type=int, default=0, help="accepted for symmetry; unused")
    common(sp)
    sp.set_defaults(fn=cmd_stego_decode)

    sp = sub.add_parser("fit", help="fit an n-gram model")
    sp.add_argument("corpus", help="one whitespace-tokenized sequence per line")
    sp.add_argument("--order", type=int, default=1)
    sp.add_argument("--eos", default=None, help="end symbol appended to every line")
    sp.add_argument("--add", type=float, default=0.0, help="additive smoothing")
    common(sp)
    sp.set_defaults(fn=cmd_fit)

    sp = sub.add_parser("experiment", help="run an experiment")
    sp.add_argument("name", choices=sorted(experiments.EXPERIMENTS))
    sp.add_argument("--variant", choices=VARIANTS, default=None)
    sp.add_argument("--merge", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None,
                    help="worker processes (default: ENTROCOUP_THREADS or CPU count)")
    common(sp, fmt=True)
    sp.set_defaults(fn=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError, OSError, NgramFormatError) as e:
        print(f"entrocoup {args.cmd}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
