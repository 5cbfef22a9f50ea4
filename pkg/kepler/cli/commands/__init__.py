"""
Subcomandos da CLI, um módulo por comando.
"""

from kepler.cli.commands import bound, decompose, gen, report, score, verify

COMMANDS = (gen, decompose, score, bound, verify, report)

__all__ = ["COMMANDS", "bound", "decompose", "gen", "report", "score", "verify"]
