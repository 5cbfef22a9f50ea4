"""
Modelos de dados do oráculo de Monte Carlo.
"""

from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field


class McEstimate(BaseModel):
    """Estimativa de Monte Carlo com erro padrão."""

    model_config = ConfigDict(frozen=True)

    value: float
    stderr: float = Field(ge=0)
    samples: int = Field(ge=0)
    seed: int

    def z_score(self, reference: float) -> float:
        """Desvio normalizado em relação a um valor de referência."""
        if self.stderr == 0.0:
            return 0.0 if self.value == reference else float("inf")
        return (self.value - reference) / self.stderr

    def agrees(self, reference: float, sigmas: float = 4.0, floor: float = 1e-12) -> bool:
        """Verdadeiro se |valor − referência| <= sigmas·σ (com piso absoluto)."""
        return abs(self.value - reference) <= sigmas * self.stderr + floor

    def interval(self, sigmas: float = 4.0) -> Tuple[float, float]:
        return self.value - sigmas * self.stderr, self.value + sigmas * self.stderr

    @classmethod
    def merge(cls, parts: "list[McEstimate]", seed: int) -> "McEstimate":
        """Soma estimativas independentes (estratos), propagando o erro."""
        value = sum(p.value for p in parts)
        stderr = sum(p.stderr**2 for p in parts) ** 0.5
        samples = sum(p.samples for p in parts)
        return cls(value=value, stderr=stderr, samples=samples, seed=seed)


class OracleAgreement(BaseModel):
    """Valor analítico de uma peça contra a estimativa do oráculo."""

    subject: str = Field(description="Identificador da peça")
    analytic: float
    estimate: McEstimate
    sigmas: float = Field(default=4.0, gt=0)

    @property
    def passed(self) -> bool:
        return self.estimate.agrees(self.analytic, self.sigmas)
