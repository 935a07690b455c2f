"""Command line entry point: ``celldisc [global flags] SUBCOMMAND ...``.

Exit codes: 0 success, 2 a verification check failed, 3 bad configuration.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .analytics import scheme_mu_closed_form
from .codebook import Scheme, build_codebook
from .config import dump_config, load_config, parse_config
from .errors import CalibrationError, CellDiscoveryError, ConfigError
from .measurement import best_rbf_draw, gram_magnitudes, mutual_coherence, sensing_matrix
from .scenario import SchemeSpec, run_bfgain_cdf, run_detection_curve, run_rf_chain_study, to_csv
from .verify import PRESETS, run_theorem_verification

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG = 0, 2, 3

DEFAULT_SCHEMES = {
    "curve": (SchemeSpec("mubb", u=0), SchemeSpec("rbf", u=0), SchemeSpec("dbc", beta_t=2),
              SchemeSpec("mubb", u=1), SchemeSpec("rbf", u=1), SchemeSpec("dbc", beta_t=4)),
    "rfchains": (SchemeSpec("mubb", u=1), SchemeSpec("rbf", u=1)),
    "bfgain": (SchemeSpec("mubb", u=1), SchemeSpec("rbf", u=1), SchemeSpec("dbc", beta_t=4)),
}


def _parser():
    p = argparse.ArgumentParser(prog="celldisc", description="mm-wave cell discovery simulator")
    p.add_argument("--config", help="experiment file (key = value sections)")
    p.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.add_argument("--threads", type=int, help="worker threads for realizations")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coherence", help="mutual coherence of one scheme's sensing matrix")
    c.add_argument("scheme", help="bs, bc, dbs, dbc, mubb or rbf")
    c.add_argument("--n-t", type=int, default=256)
    c.add_argument("--n-r", type=int, default=4)
    c.add_argument("--n-bs", type=int, default=16)
    c.add_argument("--u", type=int, default=0)
    c.add_argument("--beta-t", type=int, default=1)
    c.add_argument("--beta-r", type=int, default=1)
    c.add_argument("--n-rf", type=int, default=1)
    c.add_argument("--draws", type=int, default=1, help="RBF: best of this many seeded draws")

    v = sub.add_parser("verify", help="closed form versus numeric cross-checks")
    v.add_argument("preset", choices=sorted(PRESETS))
    v.add_argument("--trials", type=int, help="Monte Carlo trials (fig1)")
    v.add_argument("--draws", type=int, help="RBF draws (table1) or brute-force draws (theorem2_small)")
    v.add_argument("--gain-alpha", type=float, help="path variance scale n_t n_r alpha / K (fig1)")

    sub.add_parser("curve", help="P_D versus cell length")
    sub.add_parser("rfchains", help="P_D versus the number of RF chains")
    sub.add_parser("bfgain", help="beamforming gain CDFs")

    d = sub.add_parser("dump", help="print the effective config, Gram statistics or beamformers")
    d.add_argument("what", choices=("config", "gram", "beams"))
    d.add_argument("--format", choices=("csv",), default="csv")
    d.add_argument("--scheme", default="mubb")
    d.add_argument("--n-t", type=int, default=16)
    d.add_argument("--n-r", type=int, default=4)
    d.add_argument("--n-bs", type=int, default=2)
    d.add_argument("--u", type=int, default=0)
    return p


def _experiment(args, command):
    overrides = dict(seed=args.seed, threads=args.threads)
    schemes = DEFAULT_SCHEMES.get(command)
    if args.config:
        return load_config(args.config, schemes, **overrides)
    return parse_config("", schemes, **overrides)


def _coherence(args):
    scheme = Scheme.parse(args.scheme)
    seed = 0 if args.seed is None else args.seed
    if scheme is Scheme.RBF:
        found = best_rbf_draw(args.n_t, args.n_r, args.u, args.n_bs, n_rf=args.n_rf, draws=args.draws, seed=seed)
        cb, mu = found.codebook, found.mu
    else:
        cb = build_codebook(scheme, args.n_t, args.n_r, args.n_bs, u=args.u, beta_t=args.beta_t,
                            beta_r=args.beta_r)
        mu = mutual_coherence(sensing_matrix(cb))
    closed = scheme_mu_closed_form(scheme, n_t=args.n_t, n_bs=args.n_bs, u=args.u)
    row = (cb.label(), args.n_t, args.n_r, args.n_bs, cb.m_total, float(mu),
           "" if closed is None else float(closed))
    return to_csv(("scheme", "n_t", "n_r", "n_bs", "M", "mu", "closed_form"), [row]), EXIT_OK


def _verify(args):
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.trials is not None:
        if args.preset != "fig1":
            raise ConfigError("--trials only applies to fig1")
        kw["trials"] = args.trials
    if args.gain_alpha is not None:
        if args.preset != "fig1" or not 0 < args.gain_alpha < 1:
            raise ConfigError("--gain-alpha applies to fig1 and must lie in (0, 1)")
        kw["gain_alpha"] = args.gain_alpha
    if args.draws is not None:
        if args.preset not in ("table1", "theorem2_small"):
            raise ConfigError("--draws only applies to table1 and theorem2_small")
        kw["draws"] = args.draws
    report = run_theorem_verification(args.preset, **kw)
    return report.to_csv(), EXIT_OK if report.passed else EXIT_VERIFY


def _gram(args):
    cb = build_codebook(args.scheme, args.n_t, args.n_r, args.n_bs, u=args.u, rng=np.random.default_rng(args.seed or 0))
    g = gram_magnitudes(sensing_matrix(cb))
    off = g[~np.eye(g.shape[0], dtype=bool)]
    levels, counts = np.unique(np.round(off, 9), return_counts=True)
    return to_csv(("inner_product_magnitude", "pairs"), list(zip(levels.tolist(), counts.tolist()))), EXIT_OK


def _beams(args):
    """Beamformer matrices column-major, one "re,im" entry per cell."""
    cb = build_codebook(args.scheme, args.n_t, args.n_r, args.n_bs, u=args.u, rng=np.random.default_rng(args.seed or 0))
    mats = [("w_r", cb.w_r)] + [(f"w_t[{i}]", cb.w_t[i]) for i in range(cb.n_bs)]
    rows = []
    for name, w in mats:
        for col in range(w.shape[1]):
            rows += [(name, r, col, "%.9g,%.9g" % (v.real, v.imag)) for r, v in enumerate(w[:, col])]
    return to_csv(("matrix", "row", "col", "value"), rows), EXIT_OK


def run(argv=None) -> tuple[str, int]:
    args = _parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be positive")
    if args.seed is not None and not 0 <= args.seed < 1 << 64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    if args.command == "coherence":
        return _coherence(args)
    if args.command == "verify":
        return _verify(args)
    if args.command == "dump":
        if args.what == "gram":
            return _gram(args)
        if args.what == "beams":
            return _beams(args)
        return dump_config(_experiment(args, "curve")), EXIT_OK
    cfg = _experiment(args, args.command)
    runner = {"curve": run_detection_curve, "rfchains": run_rf_chain_study, "bfgain": run_bfgain_cdf}
    return runner[args.command](cfg), EXIT_OK


def main(argv=None) -> int:
    try:
        text, code = run(argv)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as e:
        print(f"calibration failed: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except (CellDiscoveryError, ValueError) as e:
        # invalid scheme names or parameters are configuration problems too
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    args = _parser().parse_args(argv)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
