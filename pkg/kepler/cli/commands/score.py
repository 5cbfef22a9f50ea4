"""
Subcomando `score`: pontuações de estrela por vértice em um ou mais esquemas.
"""

import argparse

from kepler.cli.common import (
    CommandOutcome,
    add_input_argument,
    add_scheme_arguments,
    add_vertex_limit,
    common_parser,
    limit_vertices,
    read_packing,
    schemes_from,
)
from kepler.models.scoring import SchemeName
from kepler.services.reports import ReportWriter, cluster_rows, region_rows, star_rows
from kepler.services.scoring import Scorer


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "score",
        parents=[common_parser()],
        help="Pontua as estrelas dos vértices interiores",
    )
    add_input_argument(parser)
    add_scheme_arguments(parser)
    add_vertex_limit(parser)
    parser.add_argument("--regions", action="store_true", help="Grava também o detalhamento por região")
    parser.set_defaults(handler=execute)


def execute(args: argparse.Namespace, writer: ReportWriter) -> CommandOutcome:
    """
    Grava `stars_<esquema>` (e `regions_<esquema>`, `clusters_hf`) e resume
    máximo, média e argmax por esquema.
    """
    packing = read_packing(args)
    scorer = Scorer(packing)
    vertices = limit_vertices(sorted(scorer.interior), args.max_vertices)
    summaries = {}
    for scheme in schemes_from(args):
        stars = scorer.score_vertices(scheme, vertices)
        slug = scheme.name.value
        writer.write_table(f"stars_{slug}", star_rows(stars), args.csv)
        if args.regions:
            writer.write_table(f"regions_{slug}", region_rows(stars), args.csv)
        if scheme.name == SchemeName.HF:
            writer.write_table("clusters_hf", cluster_rows(stars), args.csv)
        if stars:
            summaries[scheme.label] = scorer.summarize(stars, scheme).model_dump()
    writer.write_json("score_summary.json", summaries)
    return CommandOutcome(
        summary={"vertices": len(vertices), "schemes": summaries},
        inputs=[args.input],
        options={"max_vertices": args.max_vertices, "regions": args.regions},
    )
