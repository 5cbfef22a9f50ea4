"""
Relatórios JSON/CSV e manifesto de execução.

Todos os números de ponto flutuante saem com 12 algarismos significativos; o
manifesto guarda a configuração, as versões dos pacotes, as sementes e os
SHA-256 de entradas e saídas.
"""

import hashlib
import json
from datetime import datetime
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel

from kepler.core.config import settings
from kepler.core.logging import LoggerMixin, log_pipeline_event
from kepler.models.bounds import BoundTableRow
from kepler.models.packing import Packing
from kepler.models.run import CheckFailure, RunConfig, RunManifest
from kepler.models.scoring import StarScore
from kepler.services.packing import save_packing

FLOAT_FORMAT = "%.12g"
TRACKED_PACKAGES = ("kepler-scoring", "numpy", "scipy", "pandas", "pydantic", "structlog")


class ReportError(Exception):
    """Erro específico da escrita de relatórios."""
    pass


def round_floats(value: Any) -> Any:
    """Converte recursivamente floats (e escalares numpy) para 12 algarismos significativos."""
    if isinstance(value, BaseModel):
        return round_floats(value.model_dump(mode="json"))
    if isinstance(value, dict):
        return {str(k): round_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(v) for v in value]
    if isinstance(value, np.ndarray):
        return round_floats(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if not np.isfinite(x):
            return None
        return float(f"{x:.12g}")
    return value


def sha256_of(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_versions() -> Dict[str, str]:
    """Versões instaladas dos pacotes que afetam os resultados."""
    versions = {}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = settings.app_version if name == "kepler-scoring" else "unknown"
    return versions


# === LINHAS TABULARES ===

def star_rows(stars: Sequence[StarScore]) -> List[Dict[str, Any]]:
    """Uma linha por vértice: esquema, total e contagem de faces por lados."""
    rows = []
    for star in sorted(stars, key=lambda s: s.vertex):
        row: Dict[str, Any] = {
            "vertex": star.vertex,
            "scheme": star.scheme,
            "total": star.total,
            "regions": len(star.regions),
            "cached": star.cached,
        }
        if star.clusters:
            row["clusters"] = len(star.clusters)
            row["max_cluster"] = max(c.score for c in star.clusters)
        if star.neighbor_count is not None:
            row["neighbor_count"] = star.neighbor_count
            row["self_weight"] = star.self_weight
        rows.append(row)
    return rows


def region_rows(stars: Sequence[StarScore]) -> List[Dict[str, Any]]:
    """Uma linha por (vértice, região) com ramo e regra."""
    return [
        {
            "vertex": star.vertex,
            "scheme": star.scheme,
            "region": r.region,
            "weight": r.weight,
            "branch": r.branch.value,
            "rule": r.rule,
        }
        for star in sorted(stars, key=lambda s: s.vertex)
        for r in star.regions
    ]


def cluster_rows(stars: Sequence[StarScore]) -> List[Dict[str, Any]]:
    return [
        {
            "vertex": star.vertex,
            "face_index": c.face_index,
            "sides": c.sides,
            "score": c.score,
            "exact": c.exact,
        }
        for star in sorted(stars, key=lambda s: s.vertex)
        for c in star.clusters
    ]


def bound_rows(rows: Iterable[BoundTableRow]) -> List[Dict[str, Any]]:
    return [r.model_dump() for r in rows]


class ReportWriter(LoggerMixin):
    """Escreve artefatos de uma execução e mantém os digests para o manifesto."""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.outputs: Dict[str, str] = {}

    def _path(self, name: str) -> Path:
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ReportError(f"Não foi possível criar {self.output_dir}: {str(e)}")
        return self.output_dir / name

    def _record(self, path: Path) -> Path:
        self.outputs[path.name] = sha256_of(path)
        log_pipeline_event("report_written", stage="report", path=str(path))
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        """
        Grava um payload (modelos pydantic, dicts, listas) em JSON.

        Raises:
            ReportError: Se a escrita falha
        """
        path = self._path(name)
        try:
            path.write_text(json.dumps(round_floats(payload), indent=2, sort_keys=True), encoding="utf-8")
        except (OSError, TypeError) as e:
            raise ReportError(f"Falha ao gravar {path}: {str(e)}")
        return self._record(path)

    def write_csv(self, name: str, rows: List[Dict[str, Any]]) -> Path:
        """
        Grava linhas em CSV com pandas.

        Raises:
            ReportError: Se a escrita falha
        """
        path = self._path(name)
        try:
            pd.DataFrame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        except OSError as e:
            raise ReportError(f"Falha ao gravar {path}: {str(e)}")
        return self._record(path)

    def write_packing(self, packing: Packing, name: str = "packing.json") -> Path:
        """Grava o empacotamento no formato de arquivo de `save_packing`."""
        path = self._path(name)
        try:
            save_packing(packing, str(path))
        except OSError as e:
            raise ReportError(f"Falha ao gravar {path}: {str(e)}")
        return self._record(path)

    def write_table(self, name: str, rows: List[Dict[str, Any]], csv: bool) -> Path:
        """CSV quando pedido, senão JSON, com o mesmo nome base."""
        if csv:
            return self.write_csv(f"{name}.csv", rows)
        return self.write_json(f"{name}.json", rows)

    def write_manifest(
        self,
        config: RunConfig,
        inputs: Optional[Iterable[Path]] = None,
        exit_code: int = 0,
        failures: Optional[List[CheckFailure]] = None,
        started_at: Optional[datetime] = None,
    ) -> Path:
        """Grava `manifest.json` com configuração, versões, sementes e digests."""
        manifest = RunManifest(
            config=config,
            settings=round_floats(settings.model_dump()),
            versions=package_versions(),
            inputs={str(p): sha256_of(Path(p)) for p in inputs or []},
            outputs=dict(self.outputs),
            exit_code=exit_code,
            failures=failures or [],
            started_at=started_at or datetime.utcnow(),
            finished_at=datetime.utcnow(),
        )
        path = self._path("manifest.json")
        try:
            path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
        except OSError as e:
            raise ReportError(f"Falha ao gravar o manifesto: {str(e)}")
        log_pipeline_event("manifest_written", stage="report", path=str(path), exit_code=exit_code)
        return path
