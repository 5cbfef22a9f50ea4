"""
Subcomando `report`: tabelas-resumo de um empacotamento.
"""

import argparse
from collections import Counter
from typing import Any, Dict, List

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
from kepler.models.packing import Box
from kepler.services.bounds import DensityBounds, bound_f
from kepler.services.reports import ReportWriter
from kepler.services.scoring import Scorer


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "report",
        parents=[common_parser()],
        help="Resumos CSV/JSON: esquemas, faces dos mapas planares e densidades",
    )
    add_input_argument(parser)
    add_scheme_arguments(parser, default="all")
    add_vertex_limit(parser)
    parser.add_argument(
        "--density-side",
        dest="density_sides",
        type=float,
        action="append",
        default=[],
        help="Lado de cubo centrado no domínio para a densidade (repetível)",
    )
    parser.set_defaults(handler=execute)


def execute(args: argparse.Namespace, writer: ReportWriter) -> CommandOutcome:
    """
    Grava `summary` (uma linha por esquema), `faces` (histograma de lados das
    faces dos mapas planares) e, se pedidas, `density`.
    """
    packing = read_packing(args)
    scorer = Scorer(packing)
    vertices = limit_vertices(sorted(scorer.interior), args.max_vertices)

    summary_rows: List[Dict[str, Any]] = []
    for scheme in schemes_from(args):
        stars = scorer.score_vertices(scheme, vertices)
        if not stars:
            continue
        summary = scorer.summarize(stars, scheme)
        bound = bound_f(scheme.a_const, scheme.b_const, summary.max_score)
        summary_rows.append(
            {
                "scheme": summary.scheme,
                "vertices": summary.vertices,
                "max_score": summary.max_score,
                "mean_score": summary.mean_score,
                "argmax_vertex": summary.argmax_vertex,
                "a": scheme.a_const,
                "b": scheme.b_const,
                "f": bound.value,
                **summary.extras,
            }
        )
    writer.write_table("summary", summary_rows, args.csv)

    histogram: Counter = Counter()
    for v in vertices:
        histogram.update(scorer.planar.planar_map(v).face_statistics())
    face_rows = [{"statistic": key, "count": count} for key, count in sorted(histogram.items())]
    writer.write_table("faces", face_rows, args.csv)

    density_rows = []
    if args.density_sides:
        bounds = DensityBounds(packing, scorer=scorer)
        for side in args.density_sides:
            cube = Box.cube(packing.domain.center, side)
            density_rows.append({"side": side, "density": bounds.density(cube)})
        writer.write_table("density", density_rows, args.csv)

    return CommandOutcome(
        summary={
            "vertices": len(vertices),
            "schemes": {r["scheme"]: r["max_score"] for r in summary_rows},
            "faces": dict(histogram),
            "density": {str(r["side"]): r["density"] for r in density_rows},
        },
        inputs=[args.input],
        options={"density_sides": args.density_sides, "max_vertices": args.max_vertices},
    )
