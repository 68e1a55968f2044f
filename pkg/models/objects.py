"""
Pydantic schemas for the JSON payloads read and written by operadia.

Rationals travel as canonical strings ("p", "p/q", "-p/q"); basis elements are
referred to by string keys. A payload file holds either one object (selected by
its ``kind``) or a manifest of named objects.
"""

from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import AfterValidator, BaseModel, Field, StringConstraints, field_validator, model_validator

RationalStr = Annotated[str, StringConstraints(pattern=r"^-?\d+(/[1-9]\d*)?$")]
SparseVec = Dict[str, RationalStr]
KeyedMap = Dict[str, SparseVec]


class TruncationModel(BaseModel):
    """Finite window on arities, degrees and weights."""

    max_arity: int = Field(4, ge=0, description="Largest arity kept")
    max_weight: int = Field(4, ge=0, description="Largest weight kept")
    degree_window: Tuple[int, int] = Field((-64, 64), description="Inclusive degree range")

    @field_validator("degree_window")
    @classmethod
    def window_ordered(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if value[0] > value[1]:
            raise ValueError(f"empty degree window {list(value)}")
        return value


class BasisElement(BaseModel):
    key: str = Field(..., min_length=1, description="Basis label")
    degree: int = Field(..., description="Homological degree")
    arity: int = Field(1, ge=0, description="Arity (ignored for chain complexes and cogebras)")
    weight: int = Field(0, ge=0, description="Weight used by truncation and filtrations")


def _unique_keys(basis: List[BasisElement]) -> List[BasisElement]:
    seen = set()
    for element in basis:
        if element.key in seen:
            raise ValueError(f"basis key {element.key!r} is repeated")
        seen.add(element.key)
    return basis


Basis = Annotated[List[BasisElement], AfterValidator(_unique_keys)]


class ComplexPayload(BaseModel):
    """Chain complex: a graded basis and a degree −1 differential."""

    kind: Literal["complex"] = "complex"
    name: str = Field("X", description="Display name")
    basis: Basis
    differential: KeyedMap = Field(default_factory=dict, description="d(key) as a sparse vector")


class SequencePayload(BaseModel):
    """Symmetric (or planar) sequence with adjacent transpositions σ₁…σₙ₋₁ per arity."""

    kind: Literal["sequence"] = "sequence"
    name: str = "M"
    planar: bool = True
    basis: Basis
    transpositions: Dict[str, List[KeyedMap]] = Field(
        default_factory=dict, description="arity → [σᵢ as a keyed map], ignored when planar"
    )


class CompositionEntry(BaseModel):
    x: str
    i: int = Field(..., ge=1, description="Input of x receiving y")
    y: str
    result: SparseVec


class OperadPayload(BaseModel):
    """Finite planar operad given by its table of partial compositions."""

    kind: Literal["operad"] = "operad"
    name: str = "P"
    basis: Basis
    unit: str
    compositions: List[CompositionEntry] = Field(default_factory=list, description="Missing entries compose to 0")
    differential: KeyedMap = Field(default_factory=dict)

    @model_validator(mode="after")
    def unit_in_basis(self) -> "OperadPayload":
        if self.unit not in {b.key for b in self.basis}:
            raise ValueError(f"unit {self.unit!r} is not a basis key")
        return self


class DecompositionEntry(BaseModel):
    z: str
    bottom: str
    tops: List[str]
    coeff: RationalStr = "1"


class CoperadPayload(BaseModel):
    """Finite planar curved coperad given by its decomposition table."""

    kind: Literal["coperad"] = "coperad"
    name: str = "Q"
    basis: Basis
    unit: str
    counit: SparseVec = Field(default_factory=dict, description="τ on arity 1 keys; defaults to τ(unit) = 1")
    decomposition: List[DecompositionEntry] = Field(default_factory=list)
    differential: KeyedMap = Field(default_factory=dict)
    curvature: SparseVec = Field(default_factory=dict, description="θ on arity 1 keys")

    @model_validator(mode="after")
    def unit_in_basis(self) -> "CoperadPayload":
        if self.unit not in {b.key for b in self.basis}:
            raise ValueError(f"unit {self.unit!r} is not a basis key")
        return self


class TreeModel(BaseModel):
    """A planar tree of Bar†(Q): a vertex e_z with one child per input, ``null`` for a leaf."""

    generator: str = Field(..., description="Key of the coperad element z labelling the vertex")
    children: List[Optional["TreeModel"]] = Field(default_factory=list)


TreeModel.model_rebuild()


class CoactionEntry(BaseModel):
    v: str
    operation: Optional[TreeModel] = Field(None, description="Element of Bar†(Q); null is the unit")
    word: List[str]
    coeff: RationalStr = "1"


class CogebraPayload(BaseModel):
    """Cogebra over Bar†(Q), Q being supplied separately."""

    kind: Literal["cogebra"] = "cogebra"
    name: str = "V"
    basis: Basis
    coaction: List[CoactionEntry] = Field(default_factory=list, description="Missing keys get v ↦ E_{η,(v)}")
    differential: KeyedMap = Field(default_factory=dict)


ObjectPayload = Annotated[
    Union[ComplexPayload, SequencePayload, OperadPayload, CoperadPayload, CogebraPayload],
    Field(discriminator="kind"),
]


class Manifest(BaseModel):
    kind: Literal["manifest"] = "manifest"
    format_version: Literal["1"] = "1"
    truncation: Optional[TruncationModel] = None
    objects: Dict[str, ObjectPayload] = Field(default_factory=dict)


Document = Annotated[
    Union[Manifest, ComplexPayload, SequencePayload, OperadPayload, CoperadPayload, CogebraPayload],
    Field(discriminator="kind"),
]


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class ReportModel(BaseModel):
    subject: str
    passed: bool
    checks: List[CheckModel]
