#!/usr/bin/env python3
"""
Script de fumaça para a CLI de pontuação de empacotamentos.

Gera um bloco CFC pequeno e a configuração dodecaédrica, e encadeia
decompose, score, bound, report e verify num diretório temporário.
"""

import io
import json
import tempfile
from contextlib import redirect_stdout
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from kepler.cli import EXIT_CHECK_FAILED, EXIT_OK, run

MARGIN = ["--margin", "10"]


def invoke(argv: List[str]) -> Tuple[int, Optional[Dict[str, Any]]]:
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = run(argv)
    out = buffer.getvalue()
    return code, (json.loads(out) if out.strip() else None)


def step(title: str, argv: List[str], accepted: Tuple[int, ...] = (EXIT_OK,)) -> bool:
    print(f"\n🔍 {title}...")
    try:
        code, payload = invoke(argv)
    except Exception as e:
        print(f"❌ Erro: {e}")
        return False
    print(f"✅ Código de saída: {code}")
    if payload is not None:
        print(f"📄 Resumo: {json.dumps(payload['summary'], indent=2, sort_keys=True)[:800]}")
    return code in accepted


def main() -> None:
    """Executa a sequência completa de comandos."""
    print("🚀 Iniciando testes de fumaça da CLI kepler\n")

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        fcc = root / "gen_fcc" / "packing.json"
        dodeca = root / "gen_dodeca" / "packing.json"

        results = [
            step(
                "Gerando bloco CFC",
                ["gen", "--lattice", "fcc", "--shells", "2", *MARGIN, "--no-validate", "-o", str(fcc.parent)],
            ),
            step("Gerando configuração dodecaédrica", ["gen", "--lattice", "dodeca", "-o", str(dodeca.parent)]),
            step(
                "Decompondo o bloco CFC",
                ["decompose", "-i", str(fcc), *MARGIN, "--max-vertices", "2", "--planar-maps", "-o", str(root / "dec")],
            ),
            step(
                "Pontuando (HF e Voronoi)",
                [
                    "score", "-i", str(fcc), *MARGIN, "--max-vertices", "2",
                    "--scheme", "hf", "--scheme", "voronoi", "-o", str(root / "score"),
                ],
            ),
            step("Tabela de cotas", ["bound", "-i", str(fcc), *MARGIN, "--scheme", "voronoi", "-o", str(root / "b")]),
            step(
                "Relatório resumido",
                ["report", "-i", str(fcc), *MARGIN, "--max-vertices", "1", "--csv", "-o", str(root / "report")],
            ),
            step(
                "Verificações na configuração local",
                ["verify", "-i", str(dodeca), "--sweep-samples", "50", "-o", str(root / "verify")],
                accepted=(EXIT_OK, EXIT_CHECK_FAILED),
            ),
        ]

    # Resumo dos resultados
    print("\n📊 RESUMO DOS TESTES:")
    print(f"✅ Sucessos: {sum(results)}")
    print(f"❌ Falhas: {len(results) - sum(results)}")
    print(f"📈 Taxa de sucesso: {sum(results)/len(results)*100:.1f}%")

    if all(results):
        print("\n🎉 Todos os comandos terminaram como esperado.")
    else:
        print("\n⚠️  Alguns comandos falharam. Verifique os logs acima.")


if __name__ == "__main__":
    main()
