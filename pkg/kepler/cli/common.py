"""
Utilidades compartilhadas pelos subcomandos: argumentos comuns, sobrescritas
de configuração, carga de entradas e construção da configuração da execução.
"""

import argparse
from pathlib import Path
from typing import Annotated, Any, Callable, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from kepler.core.config import Settings, settings
from kepler.models.packing import Packing
from kepler.models.run import CheckFailure, Command, OutputFormat, RunConfig
from kepler.models.scoring import SchemeName, ScoreScheme
from kepler.services.bounds import BoundsError
from kepler.services.decomposition import DecompositionError
from kepler.services.geometry import GeometryError
from kepler.services.oracle import OracleError
from kepler.services.packing import PackingError, load_packing
from kepler.services.reports import ReportError, ReportWriter
from kepler.services.scoring import ScoringError

SERVICE_ERRORS: Tuple[type, ...] = (
    GeometryError,
    PackingError,
    DecompositionError,
    ScoringError,
    BoundsError,
    OracleError,
    ReportError,
    ValidationError,
    OSError,
)

FLAG_SETTINGS = {
    "seed": "seed",
    "mc_samples": "mc_samples",
    "threads": "threads",
    "margin": "interior_margin",
}


class CliError(Exception):
    """Erro de uso da linha de comando."""
    pass


class CommandOutcome(BaseModel):
    """Resultado de um subcomando: resumo impresso no stdout e falhas de verificação."""

    summary: Dict[str, Any] = Field(default_factory=dict)
    failures: List[CheckFailure] = Field(default_factory=list)
    inputs: List[str] = Field(default_factory=list)
    options: Dict[str, Any] = Field(default_factory=dict)


Handler = Callable[[argparse.Namespace, ReportWriter], CommandOutcome]


# === ARGUMENTOS ===

def common_parser() -> argparse.ArgumentParser:
    """Argumentos aceitos por todos os subcomandos."""
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group("execução")
    group.add_argument("-o", "--output", default="out", help="Diretório dos artefatos (padrão: out)")
    group.add_argument("--csv", action="store_true", help="Tabelas em CSV em vez de JSON")
    group.add_argument("--seed", type=int, default=None, help="Semente de Monte Carlo")
    group.add_argument("--mc-samples", dest="mc_samples", type=int, default=None, help="Amostras por estimativa")
    group.add_argument("--threads", type=int, default=None, help="Limite de threads (padrão: KEPLER_THREADS)")
    group.add_argument("--margin", type=float, default=None, help="Margem de interioridade")
    group.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="CAMPO=VALOR",
        help="Sobrescreve um campo de configuração nesta execução",
    )
    group.add_argument(
        "--log-level",
        dest="log_level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Nível de log (stderr)",
    )
    return parser


def add_input_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-i", "--input", required=True, help="Arquivo JSON do empacotamento")


def add_scheme_arguments(parser: argparse.ArgumentParser, default: str = SchemeName.HF.value) -> None:
    choices = [s.value for s in SchemeName] + ["all"]
    parser.add_argument(
        "--scheme",
        dest="schemes",
        action="append",
        choices=choices,
        default=None,
        help=f"Esquema de pontuação, repetível (padrão: {default})",
    )
    parser.set_defaults(default_scheme=default)
    parser.add_argument("--t", dest="fejes_toth_t", type=float, default=None, help="t do esquema de Fejes-Tóth")
    parser.add_argument("--b", dest="voronoi_b", type=float, default=None, help="B do esquema de Voronoi")


def add_vertex_limit(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--max-vertices",
        dest="max_vertices",
        type=int,
        default=None,
        help="Restringe o trabalho aos primeiros N vértices interiores",
    )


# === CONFIGURAÇÃO ===

def apply_overrides(args: argparse.Namespace) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """
    Aplica flags e `--set` sobre a configuração global.

    Returns:
        Tuple: (sobrescritas aplicadas, valores anteriores para restauração)

    Raises:
        CliError: Se um campo é desconhecido ou malformado
        ValidationError: Se o valor não passa na validação do campo
    """
    requested: Dict[str, Any] = {}
    for flag, field in FLAG_SETTINGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            requested[field] = value
    for item in getattr(args, "overrides", []) or []:
        if "=" not in item:
            raise CliError(f"Sobrescrita malformada (esperado CAMPO=VALOR): {item}")
        field, raw = item.split("=", 1)
        requested[field.strip()] = raw.strip()

    applied: Dict[str, Any] = {}
    for field, raw in requested.items():
        info = Settings.model_fields.get(field)
        if info is None:
            raise CliError(f"Campo de configuração desconhecido: {field}")
        annotation = Annotated[(info.annotation, *info.metadata)] if info.metadata else info.annotation
        applied[field] = TypeAdapter(annotation).validate_python(raw)

    previous = {field: getattr(settings, field) for field in applied}
    for field, value in applied.items():
        setattr(settings, field, value)
    return applied, previous


def restore_settings(previous: Dict[str, Any]) -> None:
    for field, value in previous.items():
        setattr(settings, field, value)


def schemes_from(args: argparse.Namespace) -> List[ScoreScheme]:
    """Esquemas pedidos; "all" expande para os cinco."""
    names = args.schemes or [args.default_scheme]
    if "all" in names:
        names = [s.value for s in SchemeName]
    t = settings.fejes_toth_t if args.fejes_toth_t is None else args.fejes_toth_t
    b = settings.voronoi_b if args.voronoi_b is None else args.voronoi_b
    schemes = []
    for name in dict.fromkeys(names):
        scheme_name = SchemeName(name)
        params: Dict[str, Any] = {"name": scheme_name}
        if scheme_name == SchemeName.FEJES_TOTH:
            params["t_param"] = t
        if scheme_name == SchemeName.VORONOI:
            params["b_param"] = b
        schemes.append(ScoreScheme(**params))
    return schemes


def build_run_config(
    command: Command, args: argparse.Namespace, overrides: Dict[str, Any], options: Dict[str, Any]
) -> RunConfig:
    """Configuração registrada no manifesto."""
    names = getattr(args, "schemes", None) or [getattr(args, "default_scheme", SchemeName.HF.value)]
    if "all" in names:
        names = [s.value for s in SchemeName]
    return RunConfig(
        command=command,
        input_path=getattr(args, "input", None),
        output_path=str(args.output),
        output_format=OutputFormat.CSV if args.csv else OutputFormat.JSON,
        schemes=[SchemeName(n) for n in dict.fromkeys(names)],
        fejes_toth_t=getattr(args, "fejes_toth_t", None),
        voronoi_b=getattr(args, "voronoi_b", None),
        seed=settings.seed,
        mc_samples=settings.mc_samples,
        threads=settings.threads,
        overrides=overrides,
        options=options,
    )


def read_packing(args: argparse.Namespace) -> Packing:
    """
    Raises:
        CliError: Se o arquivo não existe
        PackingError: Se o conteúdo é inválido
    """
    path = Path(args.input)
    if not path.is_file():
        raise CliError(f"Arquivo de entrada não encontrado: {path}")
    return load_packing(str(path))


def limit_vertices(vertices: List[int], limit: Optional[int]) -> List[int]:
    vertices = sorted(int(v) for v in vertices)
    return vertices if limit is None else vertices[: max(limit, 0)]
