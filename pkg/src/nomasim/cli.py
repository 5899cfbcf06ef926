"""Command-line entry points: ``syslevel`` and ``linklevel``.

Exit codes: 0 success, 1 configuration error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from importlib.metadata import PackageNotFoundError, version

from .harness import (
    ConfigError,
    LinkLevelConfig,
    ScenarioConfig,
    load_config,
    run_campaign,
    run_link_campaign,
    with_overrides,
)

try:
    __version__ = version("nomasim")
except PackageNotFoundError:  # pragma: no cover - source tree without install
    __version__ = "0.0.0+unknown"


class _Parser(argparse.ArgumentParser):
    """Argparse variant that reports usage problems as config errors."""

    def error(self, message):
        raise ConfigError(message)


def _scheme_from_cli(token: str) -> str:
    return token.strip().replace("-", "_").upper()


def _parse_ebn0_range(text: str) -> tuple[float, ...]:
    try:
        start, step, stop = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"--ebn0 expects start:step:stop, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigError("--ebn0 needs step > 0 and stop >= start")
    grid = []
    value = start
    while value <= stop + 1e-9:
        grid.append(round(value, 9))
        value += step
    return tuple(grid)


def syslevel_main(argv=None) -> int:
    parser = _Parser(
        prog="syslevel",
        description="System-level Monte Carlo campaign (NOMA vs OFDMA vs MAC bound).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key=value scenario file")
    parser.add_argument("--k", type=int, help="number of users")
    parser.add_argument("--l", type=int, help="per-subcarrier loading limit")
    parser.add_argument("--drops", type=int, help="Monte Carlo drops")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument(
        "--schemes",
        help="comma list: noma-lrm,noma-gom,ofdma-pf,mac-iwf",
    )
    parser.add_argument("--out", required=True, help="output directory for CSVs")
    try:
        args = parser.parse_args(argv)
        config = load_config(args.config, "scenario") if args.config else ScenarioConfig()
        schemes = None
        if args.schemes:
            schemes = tuple(_scheme_from_cli(tok) for tok in args.schemes.split(","))
        config = with_overrides(
            config,
            K=args.k,
            L=args.l,
            drops=args.drops,
            master_seed=args.seed,
            schemes=schemes,
        )
    except ConfigError as exc:
        print(f"syslevel: config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"syslevel: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run_campaign(config, args.out)
    except OSError as exc:
        print(f"syslevel: {exc}", file=sys.stderr)
        return 2
    for row in summary:
        print(
            f"{row['scheme']}: mean_sum_se={row['mean_sum_se']:.4f} "
            f"mean_jain={row['mean_jain']:.4f} ratio_to_iwf={row['ratio_to_iwf']:.4f}"
        )
    return 0


def linklevel_main(argv=None) -> int:
    parser = _Parser(
        prog="linklevel",
        description="Link-level BER sweep (NOMA with ML-MUD vs single-user OFDMA).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key=value link config file")
    parser.add_argument("--coded", action="store_true", default=None,
                        help="enable the half-rate convolutional code")
    parser.add_argument("--ebn0", help="grid as start:step:stop in dB")
    parser.add_argument("--out", required=True, help="output directory for CSVs")
    try:
        args = parser.parse_args(argv)
        config = load_config(args.config, "link") if args.config else LinkLevelConfig()
        grid = _parse_ebn0_range(args.ebn0) if args.ebn0 else None
        config = with_overrides(config, coded=args.coded, ebn0_grid_db=grid)
    except ConfigError as exc:
        print(f"linklevel: config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"linklevel: {exc}", file=sys.stderr)
        return 2
    try:
        points = run_link_campaign(config, args.out)
    except OSError as exc:
        print(f"linklevel: {exc}", file=sys.stderr)
        return 2
    for p in points:
        star = " (low confidence)" if p.flagged else ""
        print(f"{p.scheme} Eb/N0={p.ebn0_db:g} dB: BER={p.ber:.3e}{star}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(syslevel_main())
