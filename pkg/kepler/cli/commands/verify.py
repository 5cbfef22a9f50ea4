"""
Subcomando `verify`: bateria completa de invariantes sobre um empacotamento.

Admissibilidade, propriedades da partição, cobertura, telescópica, acordo com
o oráculo, densidade dodecaédrica, varreduras de compressão, estatísticas das
células de Voronoi e a observação empírica Score <= 8pt. Cada verificação que
falha vira um `CheckFailure`; qualquer falha leva ao código de saída 2.
"""

import argparse
from typing import Any, Dict, List

import numpy as np

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
from kepler.core.config import settings
from kepler.core.logging import get_logger
from kepler.models.packing import Box, Packing
from kepler.models.run import CheckFailure
from kepler.models.scoring import Constants, SchemeName, ScoreScheme
from kepler.services.bounds import DensityBounds
from kepler.services.decomposition import DSystemConsistencyError, TipOverlapError, voronoi_volume_bound_ok
from kepler.services.reports import ReportWriter
from kepler.services.scoring import Scorer, compression_sweep, dodecahedral_density_check

HF_SCORE_LIMIT = 8.0 * Constants.PT + 1e-6

logger = get_logger("verify")


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "verify",
        parents=[common_parser()],
        help="Executa a bateria completa de verificações",
    )
    add_input_argument(parser)
    add_scheme_arguments(parser)
    add_vertex_limit(parser)
    parser.add_argument(
        "--sweep-samples", dest="sweep_samples", type=int, default=200, help="Perturbações por classe"
    )
    parser.add_argument(
        "--oracle-pieces", dest="oracle_pieces", type=int, default=50, help="Peças no acordo com o oráculo"
    )
    parser.add_argument(
        "--coverage-side", dest="coverage_side", type=float, default=2.0, help="Lado do cubo de cobertura"
    )
    parser.add_argument(
        "--coverage-samples", dest="coverage_samples", type=int, default=None, help="Amostras de localização"
    )
    parser.add_argument(
        "--telescoping-side",
        dest="telescoping_sides",
        type=float,
        action="append",
        default=[],
        help="Lado de cubo da verificação telescópica (repetível)",
    )
    parser.add_argument(
        "--decoupling-vertices", dest="decoupling_vertices", type=int, default=1, help="Vértices no desacoplamento"
    )
    parser.set_defaults(handler=execute)


def execute(args: argparse.Namespace, writer: ReportWriter) -> CommandOutcome:
    packing = read_packing(args)
    schemes = schemes_from(args)
    failures: List[CheckFailure] = []
    results: Dict[str, Any] = {}
    checks: Dict[str, bool] = {}

    # === VERIFICAÇÕES INDEPENDENTES DO EMPACOTAMENTO ===
    dodeca = dodecahedral_density_check()
    results["dodecahedral"] = dodeca.model_dump()
    checks["dodecahedral"] = dodeca.passed
    if not dodeca.passed:
        failures.append(
            CheckFailure(
                check="dodecahedral", subject="dodeca", detail="Densidade fora da tolerância", value=dodeca.value
            )
        )

    for kind in ("qr", "ql"):
        sweep = compression_sweep(kind, args.sweep_samples)
        results[f"sweep_{kind}"] = sweep.model_dump()
        checks[f"sweep_{kind}"] = sweep.passed
        if not sweep.passed:
            failures.append(
                CheckFailure(
                    check=f"sweep_{kind}",
                    subject=",".join(f"{x:.9g}" for x in sweep.worst_lengths),
                    detail=f"{sweep.exceedances} perturbações acima da referência",
                    value=sweep.max_gamma,
                )
            )

    if not packing.saturated:
        results["skipped"] = "configuração local: verificações de partição exigem empacotamento saturado"
    else:
        _verify_packing(args, packing, schemes, writer, failures, results, checks)

    writer.write_json("verify.json", {"checks": checks, "results": results})
    return CommandOutcome(
        summary={"checks": checks, "failures": len(failures)},
        failures=failures,
        inputs=[args.input],
        options={
            "sweep_samples": args.sweep_samples,
            "oracle_pieces": args.oracle_pieces,
            "coverage_side": args.coverage_side,
            "telescoping_sides": args.telescoping_sides,
        },
    )


def _verify_packing(
    args: argparse.Namespace,
    packing: Packing,
    schemes: List[ScoreScheme],
    writer: ReportWriter,
    failures: List[CheckFailure],
    results: Dict[str, Any],
    checks: Dict[str, bool],
) -> None:
    scorer = Scorer(packing)
    decomposer = scorer.decomposer
    vertices = limit_vertices(sorted(scorer.interior), args.max_vertices)
    if not vertices:
        failures.append(CheckFailure(check="interior", subject=packing.label, detail="Nenhum vértice interior"))
        return

    # === PARTIÇÃO ===
    try:
        system = decomposer.build_d_system(vertices)
        checks["d_system"] = True
        results["d_system"] = {"tetras": len(system.tetras), "by_rule": system.by_rule()}
    except DSystemConsistencyError as e:
        checks["d_system"] = False
        failures.append(CheckFailure(check="d_system", subject=packing.label, detail=str(e)))

    for check in decomposer.structural_checks(vertices):
        checks[f"partition_{check.name}"] = check.passed
        for item in check.failures:
            failures.append(CheckFailure(check=f"partition_{check.name}", subject=item, detail="Propriedade violada"))
    results["anomalies"] = [a.model_dump() for a in decomposer.anomalies]

    coverage_box = Box.cube(packing.domain.center, args.coverage_side)
    if packing.domain.inflated(-Constants.V_CELL_LOCALITY).contains_box(coverage_box):
        try:
            coverage = decomposer.coverage_check(coverage_box, samples=args.coverage_samples)
            results["coverage"] = coverage.model_dump()
            checks["coverage"] = coverage.passed
            if not coverage.passed:
                failures.append(
                    CheckFailure(
                        check="coverage",
                        subject=packing.label,
                        detail="Amostras fora de todas as peças ou em mais de uma",
                        value=coverage.failure_rate,
                    )
                )
        except TipOverlapError as e:
            checks["coverage"] = False
            failures.append(CheckFailure(check="tip_overlap", subject=packing.label, detail=str(e)))
    else:
        results["coverage"] = "cubo de cobertura fora da região interior"

    # === CÉLULAS DE VORONOI ===
    cell_failures = []
    for v in vertices:
        cell = decomposer.voronoi_cell(v)
        if not voronoi_volume_bound_ok(cell):
            cell_failures.append(v)
            failures.append(
                CheckFailure(
                    check="voronoi_cell",
                    subject=str(v),
                    detail=f"{cell.face_count} faces, diâmetro {cell.diameter:.6g}",
                    value=cell.diameter,
                )
            )
    checks["voronoi_cell"] = not cell_failures
    volumes = [scorer.voronoi_stats(v)[0] for v in vertices]
    results["voronoi_cells"] = {"min_volume": min(volumes), "max_volume": max(volumes), "checked": len(vertices)}

    # === PONTUAÇÃO ===
    for scheme in schemes:
        admissibility = scorer.check_admissibility(scheme, vertices)
        key = f"admissibility_{scheme.name.value}"
        checks[key] = admissibility.passed
        results[key] = admissibility.model_dump()
        for residual in admissibility.failures:
            failures.append(
                CheckFailure(
                    check=key, subject=residual.region, detail="Resíduo acima da tolerância", value=residual.residual
                )
            )

    hf = ScoreScheme(name=SchemeName.HF)
    stars = scorer.score_vertices(hf, vertices)
    exceeding = [s for s in stars if s.total > HF_SCORE_LIMIT]
    checks["hf_score_bound"] = not exceeding
    results["hf_max_score"] = max(s.total for s in stars)
    for star in exceeding:
        neighborhood = scorer.index.within(packing.centers[star.vertex], settings.star_radius)
        dump = f"hf_exceedance_{star.vertex}.json"
        writer.write_json(
            dump,
            {
                "vertex": star.vertex,
                "score": star.total,
                "relative_centers": (packing.centers[neighborhood] - packing.centers[star.vertex]).tolist(),
                "star": star,
            },
        )
        failures.append(
            CheckFailure(
                check="hf_score_bound", subject=str(star.vertex), detail=f"Configuração em {dump}", value=star.total
            )
        )

    negatives = scorer.negative_self_weights(vertices=vertices)
    results["fejes_toth_negative_self_weights"] = [n.model_dump() for n in negatives]

    for v in vertices[: max(args.decoupling_vertices, 0)]:
        decoupling = scorer.check_decoupling_truncation(v)
        key = f"decoupling_{v}"
        checks[key] = decoupling.passed
        results[key] = decoupling.model_dump()
        for face in decoupling.faces:
            if not face.passed:
                failures.append(
                    CheckFailure(
                        check="decoupling",
                        subject=f"{v}:{face.face_index}",
                        detail="Construções do cluster truncado divergem",
                        value=face.symmetric_difference,
                    )
                )

    # === ORÁCULO ===
    agreements = scorer.oracle_agreement(args.oracle_pieces, vertices=vertices)
    checks["oracle"] = all(a.passed for a in agreements)
    results["oracle"] = [
        {"subject": a.subject, "analytic": a.analytic, "value": a.estimate.value, "stderr": a.estimate.stderr}
        for a in agreements
    ]
    for a in agreements:
        if not a.passed:
            failures.append(
                CheckFailure(
                    check="oracle",
                    subject=a.subject,
                    detail="Valor analítico fora de 4σ da estimativa",
                    value=float(a.estimate.z_score(a.analytic)),
                )
            )

    # === TELESCÓPICA ===
    if args.telescoping_sides:
        bounds = DensityBounds(packing, scorer=scorer)
        for scheme in schemes:
            telescoping = bounds.verify_telescoping(scheme, args.telescoping_sides)
            key = f"telescoping_{scheme.name.value}"
            checks[key] = telescoping.passed
            results[key] = telescoping.model_dump()
            if not telescoping.passed:
                failures.append(
                    CheckFailure(
                        check=key,
                        subject=",".join(f"{r:.6g}" for r in telescoping.ratios),
                        detail="Razões de resíduo/T² fora de [0.5, 2] ou identidade interior violada",
                        value=float(np.max(telescoping.ratios)) if telescoping.ratios else None,
                    )
                )
    logger.info("verify_done", checks=len(checks), failures=len(failures))
