"""
Command-line entry point.

Usage:
    python -m app.main covering --alpha 0.5 -d 1 --trunc 100 -o cov.json
    python -m app.main norm --config norm.json --out runs/norm
    python -m app.main embed --alpha1 0 --alpha2 1 --p 1 --q 1
    python -m app.main sharpness --p 2 --q 2 --eps 0.25
    python -m app.main frame --alpha 0.5

Every command reads an optional JSON run config (--config), applies the
command-line overrides on top and validates the result before running.
Exit codes: 0 all pass bars met, 1 certification or experiment failure,
2 usage or configuration error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable

from pydantic import BaseModel, ValidationError

from app.cli.commands import cmd_covering, cmd_embed, cmd_frame, cmd_norm, cmd_sharpness
from app.core.config import config
from app.core.exceptions import (
    CertificationError,
    ConfigurationError,
    GridCapacityError,
    PlateauOverlapError,
    SpectralLeakageError,
)
from app.core.logging import setup_logging
from app.schemas.run_config import (
    CoveringRunConfig,
    EmbedRunConfig,
    FrameRunConfig,
    NormRunConfig,
    SharpnessRunConfig,
)

logger = logging.getLogger(__name__)

COMMANDS: dict[str, tuple[type[BaseModel], Callable[[BaseModel], int]]] = {
    "covering": (CoveringRunConfig, cmd_covering),
    "norm": (NormRunConfig, cmd_norm),
    "embed": (EmbedRunConfig, cmd_embed),
    "sharpness": (SharpnessRunConfig, cmd_sharpness),
    "frame": (FrameRunConfig, cmd_frame),
}

# Flags that land in the nested grid record of commands that carry one
GRID_FLAGS = {"n": "n", "half_width": "half_width"}


# ============================================================================
# Argument parsing
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON run config")
    common.add_argument("--seed", type=int, default=None, help=f"Random seed (default: {config.default_seed})")
    common.add_argument("--out", type=str, default=None, help="Output directory (default: out)")
    common.add_argument("-o", "--output", type=str, default=None, help="Main artifact name inside --out")
    common.add_argument("-d", type=int, default=None, help="Dimension (1 or 2)")

    parser = argparse.ArgumentParser(prog="alphamod", description="alpha-modulation space toolkit")
    parser.add_argument("--log-level", type=str, default=None, help="Override ALPHAMOD_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    covering = sub.add_parser("covering", parents=[common], help="Build and certify a covering")
    covering.add_argument("--family", type=str, default=None)
    covering.add_argument("--alpha", type=float, default=None)
    covering.add_argument("--r", type=float, default=None)
    covering.add_argument("--trunc", dest="trunc_radius", type=float, default=None)
    covering.add_argument("--n", type=int, default=None, help="Also sample the BAPU on a grid with n points")
    covering.add_argument("--half-width", dest="half_width", type=float, default=None)

    norm = sub.add_parser("norm", parents=[common], help="Compute M, Besov and Sobolev norms of a signal")
    norm.add_argument("--signal", dest="signal_kind", type=str, default=None)
    norm.add_argument("--signal-path", type=str, default=None)
    norm.add_argument("--signal-id", type=str, default=None)
    norm.add_argument("--kind", dest="norm_kind", type=str, default=None, help="alpha | besov | sobolev")
    norm.add_argument("--alpha", type=float, default=None)
    norm.add_argument("--p", type=str, default=None)
    norm.add_argument("--q", type=str, default=None)
    norm.add_argument("--s", type=float, default=None)
    norm.add_argument("--trunc", dest="trunc_radius", type=float, default=None)
    norm.add_argument("--n", type=int, default=None)
    norm.add_argument("--half-width", dest="half_width", type=float, default=None)

    embed = sub.add_parser("embed", parents=[common], help="Check the embedding estimates")
    embed.add_argument("--alpha1", type=float, default=None)
    embed.add_argument("--alpha2", type=float, default=None)
    embed.add_argument("--p", type=str, default=None)
    embed.add_argument("--q", type=str, default=None)
    embed.add_argument("--s", type=float, default=None)
    embed.add_argument("--direction", type=str, default=None)
    embed.add_argument("--endpoints", action="store_true", default=None)
    embed.add_argument("--signals", type=int, default=None)
    embed.add_argument("--trunc", dest="trunc_radius", type=float, default=None)
    embed.add_argument("--n", type=int, default=None)
    embed.add_argument("--half-width", dest="half_width", type=float, default=None)

    sharpness = sub.add_parser("sharpness", parents=[common], help="Growth tables of extremal families")
    sharpness.add_argument("--alpha1", type=float, default=None)
    sharpness.add_argument("--alpha2", type=float, default=None)
    sharpness.add_argument("--p", type=str, default=None)
    sharpness.add_argument("--q", type=str, default=None)
    sharpness.add_argument("--s", type=float, default=None)
    sharpness.add_argument("--t", type=float, default=None)
    sharpness.add_argument("--eps", type=float, default=None)
    sharpness.add_argument("--mode", type=str, default=None)
    sharpness.add_argument("--n-list", dest="n_list", type=int, nargs="+", default=None)
    sharpness.add_argument("--n", type=int, default=None)
    sharpness.add_argument("--half-width", dest="half_width", type=float, default=None)
    sharpness.add_argument("--trunc", dest="trunc_radius", type=float, default=None)

    frame = sub.add_parser("frame", parents=[common], help="Brushlet frame checks")
    frame.add_argument("--alpha", type=float, default=None)
    frame.add_argument("--r", type=float, default=None)
    frame.add_argument("--p", type=str, default=None)
    frame.add_argument("--q", type=str, default=None)
    frame.add_argument("--s", type=float, default=None)
    frame.add_argument("--signals", type=int, default=None)
    frame.add_argument("--trunc", dest="trunc_radius", type=float, default=None)
    frame.add_argument("--n", type=int, default=None)
    frame.add_argument("--half-width", dest="half_width", type=float, default=None)
    return parser


def load_run_config(model: type[BaseModel], args: argparse.Namespace) -> BaseModel:
    """JSON file (if any), then flag overrides, validated as one record."""
    data: dict = {}
    if args.config:
        path = Path(args.config)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read run config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"Run config {path} must hold a JSON object")

    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("config", "command", "log_level")}
    fields = model.model_fields
    if "d" in flags and "d" not in fields:
        data["grid"] = {**(data.get("grid") or {}), "d": flags.pop("d")}
    if "grid" in fields:
        for flag, field in GRID_FLAGS.items():
            if flag in flags and flag not in fields:
                grid = data.get("grid") or {}
                grid[field] = flags.pop(flag)
                data["grid"] = grid
        if "d" in flags and isinstance(data.get("grid"), dict):
            data["grid"]["d"] = flags["d"]

    if model is NormRunConfig:
        signal = data.setdefault("signal", {})
        if "signal_kind" in flags:
            signal["kind"] = flags.pop("signal_kind")
        if "signal_path" in flags:
            signal["path"] = flags.pop("signal_path")
        norm_overrides = {k: flags.pop(k) for k in ("alpha", "p", "q", "s") if k in flags}
        if "norm_kind" in flags:
            norm_overrides["kind"] = flags.pop("norm_kind")
        if norm_overrides:
            norms = data.get("norms") or [{}]
            data["norms"] = [{**entry, **norm_overrides} for entry in norms]

    data.update(flags)
    return model.model_validate(data)


# ============================================================================
# Main Entry Point
# ============================================================================

def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(args.log_level)
    model, handler = COMMANDS[args.command]
    logger.info(f"{config.app_name}: running {args.command}")
    try:
        run_config = load_run_config(model, args)
        return handler(run_config)
    except CertificationError as e:
        logger.error(f"Certification failed: {e}")
        return 1
    except (GridCapacityError, PlateauOverlapError, SpectralLeakageError) as e:
        logger.error(f"Experiment infeasible: {e}")
        return 1
    except (ValidationError, ConfigurationError, ValueError) as e:
        logger.error(f"Invalid configuration: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
