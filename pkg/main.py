"""Entry point for the entire application"""
import sys
from pathlib import Path

# Add project root to Python path
PROJECT_ROOT = Path(__file__).resolve().parent
sys.path.insert(0, str(PROJECT_ROOT))

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2


def build_parser():
    import argparse

    parser = argparse.ArgumentParser(
        description="Lorentzian filter toolkit: exact sweeps, audits and presets"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(sub):
        sub.add_argument("--out", help="Output CSV path (overrides output.path)")
        sub.add_argument("--threads", type=int, help="Worker threads (overrides experiment.threads)")
        sub.add_argument("--seed", type=int, help="Solver seed (overrides experiment.seed)")

    run = subparsers.add_parser("run", help="Run an experiment from a config file or preset")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="YAML experiment config")
    source.add_argument("--preset", help="Preset name (see 'preset --list')")
    add_run_flags(run)

    preset = subparsers.add_parser("preset", help="Print a preset as a YAML config")
    preset.add_argument("name", nargs="?", help="Preset name")
    preset.add_argument("--list", action="store_true", help="List available presets")
    add_run_flags(preset)

    validate = subparsers.add_parser("validate", help="Validate a config without running it")
    validate.add_argument("--config", required=True, help="YAML experiment config")
    add_run_flags(validate)

    serve = subparsers.add_parser("serve", help="Start the HTTP API")
    serve.add_argument("--api-host", default=None, help="API host")
    serve.add_argument("--api-port", type=int, default=None, help="API port")
    return parser


def main(argv=None):
    """Main entry point"""
    from filterlab.core.config import settings
    from filterlab.core.exceptions import InvalidConfigError, UnknownPresetError
    from filterlab.core.logging_config import configure_logging
    from filterlab.core.preset_catalog import list_presets, resolve_preset
    from filterlab.services.config_loader import cli_overrides, dump_config, load_config
    from filterlab.services.experiment_service import run_experiment

    args = build_parser().parse_args(argv)
    configure_logging(debug=settings.DEBUG, json_logs=settings.LOG_JSON)

    if args.command == "serve":
        import uvicorn
        uvicorn.run(
            "filterlab.main:app",
            host=args.api_host or settings.API_HOST,
            port=args.api_port or settings.API_PORT,
            reload=settings.DEBUG,
        )
        return EXIT_OK

    if args.command == "preset" and args.list:
        for entry in list_presets():
            print(f"{entry['key']:8s} {entry['label']} - {entry['description']}")
        return EXIT_OK

    overrides = cli_overrides(args.out, args.threads, args.seed)
    try:
        if args.command == "preset":
            if not args.name:
                print("preset: give a preset name or --list", file=sys.stderr)
                return EXIT_INVALID_CONFIG
            print(dump_config(resolve_preset(args.name, overrides)), end="")
            return EXIT_OK
        if getattr(args, "preset", None):
            config = resolve_preset(args.preset, overrides)
        else:
            config = load_config(args.config, overrides)
    except (InvalidConfigError, UnknownPresetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG

    if args.command == "validate":
        print(f"{args.config}: valid {config.kind.value} config")
        return EXIT_OK

    summary = run_experiment(config)
    print(
        f"{summary.kind.value}: {summary.rows_written} row(s) written to {summary.output_path}, "
        f"{summary.skipped} resumed, {summary.failed} failed, {summary.gap_failures} gap failure(s)"
    )
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())
