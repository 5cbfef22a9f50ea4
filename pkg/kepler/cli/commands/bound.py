"""
Subcomando `bound`: θ empírico e tabela f(A, B, θ) por esquema.
"""

import argparse

from kepler.cli.common import (
    CommandOutcome,
    add_input_argument,
    add_scheme_arguments,
    common_parser,
    read_packing,
    schemes_from,
)
from kepler.services.bounds import DensityBounds, kepler_bound
from kepler.services.reports import ReportWriter, bound_rows


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "bound",
        parents=[common_parser()],
        help="θ empírico e cota f(A, B, θ) por esquema",
    )
    add_input_argument(parser)
    add_scheme_arguments(parser)
    parser.add_argument(
        "--density-side",
        dest="density_sides",
        type=float,
        action="append",
        default=[],
        help="Lado de cubo para a busca de densidade máxima (repetível)",
    )
    parser.set_defaults(handler=execute)


def execute(args: argparse.Namespace, writer: ReportWriter) -> CommandOutcome:
    packing = read_packing(args)
    bounds = DensityBounds(packing)
    rows = bounds.bound_table(schemes_from(args))
    writer.write_table("bounds", bound_rows(rows), args.csv)

    densities = [bounds.upper_density(side) for side in args.density_sides]
    if densities:
        writer.write_table("densities", [d.model_dump() for d in densities], args.csv)

    reference = kepler_bound()
    return CommandOutcome(
        summary={
            "bounds": {r.scheme: r.f for r in rows},
            "theta": {r.scheme: r.theta for r in rows},
            "reference": reference.value,
            "densities": {str(d.side): d.density for d in densities},
        },
        inputs=[args.input],
        options={"density_sides": args.density_sides},
    )
