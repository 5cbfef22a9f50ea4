"""
Interface de linha de comando.

`run(argv)` executa um subcomando e devolve o código de saída: 0 quando tudo
passa, 2 quando alguma verificação falha (a lista de falhas vai para o stdout
e para `failures.json`), 1 para erros de uso, de E/S ou dos serviços. Logs
estruturados vão para o stderr; todo comando grava `manifest.json`.
"""

import argparse
import json
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from kepler.cli.commands import COMMANDS
from kepler.cli.common import (
    SERVICE_ERRORS,
    CliError,
    apply_overrides,
    build_run_config,
    restore_settings,
)
from kepler.core.config import settings
from kepler.core.logging import configure_logging, get_logger
from kepler.models.run import Command
from kepler.services.reports import ReportWriter, round_floats

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2

logger = get_logger("cli")


def create_parser() -> argparse.ArgumentParser:
    """
    Cria o parser com um subparser por comando.

    Returns:
        argparse.ArgumentParser: Parser configurado
    """
    parser = argparse.ArgumentParser(
        prog="kepler",
        description="Decomposições de densidade local e pontuação de empacotamentos de esferas",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS:
        module.register(subparsers)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """
    Executa um subcomando.

    Args:
        argv: Argumentos (padrão: sys.argv[1:])

    Returns:
        int: Código de saída (0, 1 ou 2)
    """
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_ERROR

    configure_logging(args.log_level)
    started_at = datetime.utcnow()
    command = Command(args.command)
    previous: Dict[str, Any] = {}
    try:
        overrides, previous = apply_overrides(args)
        writer = ReportWriter(Path(args.output))
        outcome = args.handler(args, writer)
        config = build_run_config(command, args, overrides, outcome.options)
        exit_code = EXIT_CHECK_FAILED if outcome.failures else EXIT_OK
        if outcome.failures:
            writer.write_json("failures.json", outcome.failures)
        writer.write_manifest(
            config,
            inputs=[Path(p) for p in outcome.inputs],
            exit_code=exit_code,
            failures=outcome.failures,
            started_at=started_at,
        )
    except (CliError, *SERVICE_ERRORS) as e:
        logger.error("command_failed", command=command.value, error=str(e), error_type=type(e).__name__)
        print(f"kepler {command.value}: erro: {e}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        restore_settings(previous)

    payload: Dict[str, Any] = {"command": command.value, "exit_code": exit_code, "summary": outcome.summary}
    if outcome.failures:
        payload["failures"] = outcome.failures
    print(json.dumps(round_floats(payload), indent=2, sort_keys=True))
    logger.info("command_done", command=command.value, exit_code=exit_code, failures=len(outcome.failures))
    return exit_code


def main() -> None:
    raise SystemExit(run())


__all__ = ["create_parser", "run", "main", "EXIT_OK", "EXIT_ERROR", "EXIT_CHECK_FAILED"]
