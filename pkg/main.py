"""
Ponto de entrada principal da CLI.

Permite `python main.py <comando> ...` a partir da raiz do repositório, além do
script `kepler` instalado pelo pyproject.
"""

import argparse
import sys
from typing import List, Optional

from kepler.cli import create_parser, run


def create_cli() -> argparse.ArgumentParser:
    """
    Cria e configura o parser da CLI.

    Returns:
        argparse.ArgumentParser: Parser com os subcomandos gen, decompose,
        score, bound, verify e report
    """
    return create_parser()


def main(argv: Optional[List[str]] = None) -> int:
    """Executa a CLI e devolve o código de saída."""
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    raise SystemExit(main())
