"""
Subcomando `gen`: gera um empacotamento canônico e o valida.
"""

import argparse

from kepler.cli.common import CliError, CommandOutcome, common_parser
from kepler.core.config import settings
from kepler.models.packing import Box, PackingKind
from kepler.models.run import CheckFailure
from kepler.services.packing import PackingGenerator, PackingValidator, interior_vertices
from kepler.services.reports import ReportWriter

GENERATED_KINDS = [k.value for k in PackingKind if k != PackingKind.CUSTOM]


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "gen",
        parents=[common_parser()],
        help="Gera um empacotamento (fcc, hcp, dodeca, pentaprism, random)",
    )
    parser.add_argument("--lattice", choices=GENERATED_KINDS, required=True, help="Tipo de empacotamento")
    parser.add_argument("--shells", type=int, default=2, help="Camadas interiores (fcc/hcp)")
    parser.add_argument("--side", type=float, default=None, help="Lado da caixa (random)")
    parser.add_argument("--no-validate", dest="validate", action="store_false", help="Pula a validação")
    parser.set_defaults(handler=execute)


def execute(args: argparse.Namespace, writer: ReportWriter) -> CommandOutcome:
    """
    Gera, valida e grava `packing.json` no diretório de saída.

    Raises:
        CliError: Se os parâmetros do gerador são inválidos
    """
    kind = PackingKind(args.lattice)
    generator = PackingGenerator()
    if kind in (PackingKind.FCC, PackingKind.HCP):
        if args.shells < 2:
            raise CliError("--shells deve ser >= 2")
        packing = generator.gen_fcc(args.shells) if kind == PackingKind.FCC else generator.gen_hcp(args.shells)
    elif kind == PackingKind.DODECAHEDRAL:
        packing = generator.gen_dodecahedral()
    elif kind == PackingKind.PENTAGONAL_PRISM:
        packing = generator.gen_pentagonal_prism()
    else:
        side = args.side if args.side is not None else 2.0 * settings.interior_margin + 8.0
        if side <= 0:
            raise CliError("--side deve ser positivo")
        packing = generator.gen_random_saturated(Box.cube([0.0, 0.0, 0.0], side), settings.seed)

    writer.write_packing(packing)

    failures = []
    summary = {
        "label": packing.label,
        "kind": packing.kind.value,
        "size": packing.size,
        "interior": int(len(interior_vertices(packing))),
        "saturated": packing.saturated,
    }
    if args.validate:
        report = PackingValidator().validate(packing)
        writer.write_json("validation.json", report)
        summary["valid"] = report.valid
        summary["min_distance"] = report.min_distance
        for violation in report.distance_violations:
            failures.append(
                CheckFailure(
                    check="min_distance",
                    subject=f"{violation.i}-{violation.j}",
                    detail="Centros a distância menor que 2",
                    value=violation.distance,
                )
            )
        for hole in report.holes:
            failures.append(
                CheckFailure(
                    check="saturation",
                    subject=",".join(f"{x:.6g}" for x in hole.point),
                    detail="Ponto do domínio a distância >= 2 de todos os centros",
                    value=hole.distance,
                )
            )
    return CommandOutcome(summary=summary, failures=failures, options={"lattice": kind.value, "shells": args.shells})
