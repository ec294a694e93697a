"""DTOs for the decomposed attention block."""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.common.enums import AttentionNormalization
from app.common.errors import ConfigError


class LttdConfig(BaseModel):
    """Extents of the three modalities, slicing parameter and joint dimension."""

    model_config = ConfigDict(extra="forbid", frozen=True, use_enum_values=False)

    n1: int = Field(..., ge=1, description="Channel count of M1 (past frames)")
    n2: int = Field(..., ge=1, description="Channel count of M2 (steering series)")
    n3: int = Field(..., ge=1, description="Channel count of M3 (current image)")
    d1: int = Field(..., ge=1, description="Channel dimension of M1")
    d2: int = Field(..., ge=1, description="Channel dimension of M2")
    d3: int = Field(..., ge=1, description="Channel dimension of M3")
    r_slices: int = Field(1, ge=1, description="Slicing parameter R")
    d_z: int = Field(..., ge=1, description="Joint representation dimension")
    normalize_attention: AttentionNormalization = Field(
        AttentionNormalization.RAW, description="raw weights or softmax over all triplets",
    )

    @model_validator(mode="after")
    def _check_slices(self) -> "LttdConfig":
        for name, extent in (("d1", self.d1), ("d2", self.d2), ("d3", self.d3)):
            if extent % self.r_slices:
                raise ConfigError(
                    f"r_slices={self.r_slices} does not divide {name}={extent}",
                    {"r_slices": self.r_slices, name: extent},
                )
        return self

    @property
    def counts(self) -> tuple[int, int, int]:
        """Channel counts (n1, n2, n3)."""
        return (self.n1, self.n2, self.n3)

    @property
    def dims(self) -> tuple[int, int, int]:
        """Channel dimensions (d1, d2, d3)."""
        return (self.d1, self.d2, self.d3)

    @property
    def slice_dims(self) -> tuple[int, int, int]:
        """Per-slice factor widths d_l / R."""
        return tuple(extent // self.r_slices for extent in self.dims)  # type: ignore[return-value]


class ParamCount(BaseModel):
    """Parameter accounting of the full tensor against its decomposition."""

    full_tensor_params: int = Field(..., description="(n1 d1)(n2 d2)(n3 d3) d_z")
    decomposed_params: int = Field(..., description="Factor matrices + cores + projections")
    decomposition_rate: float = Field(..., description="full / decomposed")
