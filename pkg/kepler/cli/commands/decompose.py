"""
Subcomando `decompose`: sistema D, pontas, V-células, mapas planares e anomalias.
"""

import argparse
from typing import Any, Dict, List

from kepler.cli.common import (
    CommandOutcome,
    add_input_argument,
    add_vertex_limit,
    common_parser,
    limit_vertices,
    read_packing,
)
from kepler.core.logging import log_pipeline_event
from kepler.models.run import CheckFailure
from kepler.services.decomposition import Decomposer, DSystemConsistencyError, TipOverlapError
from kepler.services.geometry import cm_volume
from kepler.services.packing import interior_vertices
from kepler.services.planar_map import PlanarMapBuilder
from kepler.services.reports import ReportWriter


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "decompose",
        parents=[common_parser()],
        help="Constrói o sistema D, as V-células e o relatório de anomalias",
    )
    add_input_argument(parser)
    add_vertex_limit(parser)
    parser.add_argument(
        "--planar-maps", dest="planar_maps", action="store_true", help="Inclui estatísticas dos mapas planares"
    )
    parser.set_defaults(handler=execute)


def execute(args: argparse.Namespace, writer: ReportWriter) -> CommandOutcome:
    packing = read_packing(args)
    decomposer = Decomposer(packing)
    vertices = limit_vertices(interior_vertices(packing).tolist(), args.max_vertices)
    failures: List[CheckFailure] = []

    try:
        system = decomposer.build_d_system(vertices)
    except DSystemConsistencyError as e:
        failures.append(CheckFailure(check="d_system", subject="d_system", detail=str(e)))
        system = decomposer.build_d_system(vertices, check=False)

    d_rows = [
        {
            "tetra": "-".join(str(i) for i in d.key),
            "kind": d.kind.value,
            "rule": d.rule.value,
            "spine": "-".join(str(i) for i in d.spine) if d.spine else None,
            "isolated": d.isolated,
            "in_q_octahedron": d.in_q_octahedron,
            "volume": cm_volume(d.tetra),
        }
        for d in system.tetras
    ]
    writer.write_table("d_system", d_rows, args.csv)

    tips = decomposer.compute_tips(system)
    tip_rows = [
        {
            "tetra": "-".join(str(i) for i in tip.tetra_key),
            "negative_vertex": tip.negative_vertex,
            "coverage": tip.coverage.value,
            "volume": tip.polyhedron.volume,
            "covered_volume": tip.covered_volume,
        }
        for tip in tips
    ]
    writer.write_table("tips", tip_rows, args.csv)

    cell_rows: List[Dict[str, Any]] = []
    for v in vertices:
        try:
            cell = decomposer.v_cell(v)
        except TipOverlapError as e:
            failures.append(CheckFailure(check="tip_overlap", subject=str(v), detail=str(e)))
            continue
        cell_rows.append(
            {
                "vertex": v,
                "volume": cell.volume,
                "covered_volume": cell.covered_volume,
                "voronoi_volume": cell.voronoi_volume,
                "lost_volume": cell.lost_volume,
                "gained_volume": cell.gained_volume,
                "clipped": cell.clipped,
            }
        )
    writer.write_table("v_cells", cell_rows, args.csv)

    if args.planar_maps:
        builder = PlanarMapBuilder(decomposer)
        map_rows = []
        for v in vertices:
            pm = builder.planar_map(v)
            map_rows.append({"vertex": v, "nodes": len(pm.nodes), "faces": len(pm.faces), **pm.face_statistics()})
        writer.write_table("planar_maps", map_rows, args.csv)

    writer.write_json("anomalies.json", decomposer.anomalies)
    log_pipeline_event("decompose_done", stage="decompose", tetras=len(system.tetras), cells=len(cell_rows))
    return CommandOutcome(
        summary={
            "vertices": len(vertices),
            "d_tetras": len(system.tetras),
            "by_rule": system.by_rule(),
            "excluded_spines": len(system.excluded_spines),
            "tips": len(tips),
            "uncovered_tips": sum(1 for t in tips if t.uncovered),
            "anomalies": len(decomposer.anomalies),
        },
        failures=failures,
        inputs=[args.input],
        options={"max_vertices": args.max_vertices, "planar_maps": args.planar_maps},
    )
