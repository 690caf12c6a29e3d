"""The evolution report shared by every semantics, and its JSON form."""

from __future__ import annotations

from dataclasses import dataclass, field

from .linalg import DensityMatrix, Operator

SCHEMA_VERSION = 1


def _num(x):
    return None if x is None else float(x)


@dataclass(eq=False)
class EvolutionReport:
    model: str
    output: DensityMatrix | None
    forbidden: bool
    success_probability: float
    raw_probability: float | None = None
    consistency_residual: float | None = None
    rho_ctc: DensityMatrix | None = None
    entropies: dict = field(default_factory=dict)
    mutual_information: float | None = None
    c_operator: Operator | None = None
    scenario: str | None = None
    extra: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "scenario": self.scenario,
            "model": self.model,
            "forbidden": bool(self.forbidden),
            "success_probability": float(self.success_probability),
            "raw_probability": _num(self.raw_probability),
            "consistency_residual": _num(self.consistency_residual),
            "output": None if self.output is None else self.output.to_dict(),
            "rho_ctc": None if self.rho_ctc is None else self.rho_ctc.to_dict(),
            "c_operator": None if self.c_operator is None else self.c_operator.to_dict(),
            "entropies": {k: float(v) for k, v in self.entropies.items()},
            "mutual_information": _num(self.mutual_information),
            "extra": self.extra,
            "wall_time": float(self.wall_time),
        }

    @classmethod
    def from_dict(cls, data: dict) -> EvolutionReport:
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")

        def dm(key):
            return None if data.get(key) is None else DensityMatrix.from_dict(data[key])

        return cls(
            model=data["model"],
            output=dm("output"),
            forbidden=bool(data["forbidden"]),
            success_probability=float(data["success_probability"]),
            raw_probability=data.get("raw_probability"),
            consistency_residual=data.get("consistency_residual"),
            rho_ctc=dm("rho_ctc"),
            entropies=dict(data.get("entropies") or {}),
            mutual_information=data.get("mutual_information"),
            c_operator=None if data.get("c_operator") is None
            else Operator.from_dict(data["c_operator"]),
            scenario=data.get("scenario"),
            extra=dict(data.get("extra") or {}),
            wall_time=float(data.get("wall_time", 0.0)),
        )

    def summary_row(self) -> dict:
        """Scalar metrics only, for CSV output."""
        row = {
            "scenario": self.scenario,
            "model": self.model,
            "forbidden": self.forbidden,
            "success_probability": self.success_probability,
            "raw_probability": self.raw_probability,
            "consistency_residual": self.consistency_residual,
            "mutual_information": self.mutual_information,
        }
        row.update({f"entropy_{k}": v for k, v in self.entropies.items()})
        return row
