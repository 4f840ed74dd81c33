"""Versioned YAML model documents.

Document layout (version 1), documented field by field in docs/model-format.md:

    format: merge-states-model
    version: 1
    kind: hmm            # or gmm
    K: 3
    schema:
      names: [dv_lead, dx_lag, vx_ego, vy_ego]
      outputs: [vy_ego]
    pi: [...]            # hmm only
    trans: [[...], ...]  # hmm only, row-major
    weights: [...]       # gmm only
    source: independent  # gmm only
    components:
      - mean: [...]
        covariance: [[...], ...]

Floats are written with their shortest round-trip representation, so
deserialize_model(serialize_model(m)) reproduces every parameter bit for bit.
"""

from pathlib import Path
from typing import List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, Field, ValidationError

from .exceptions import ModelFormatError, ModelInvariantError, SingularModelError
from .models import FeatureSchema, GaussianComponent, GmmModel, HmmModel

DOCUMENT_FORMAT = "merge-states-model"
DOCUMENT_VERSION = 1

AnyModel = Union[HmmModel, GmmModel]


class SchemaDocument(BaseModel):
    """Feature schema section of a model document."""

    names: List[str] = Field(..., min_length=1, description="Ordered feature names")
    outputs: List[str] = Field(default_factory=lambda: ["vy_ego"], description="Output block")


class ComponentDocument(BaseModel):
    """One Gaussian component."""

    mean: List[float] = Field(..., min_length=1)
    covariance: List[List[float]] = Field(..., min_length=1)


class ModelDocument(BaseModel):
    """Validated structure of a model document before invariant checks."""

    format: Literal["merge-states-model"] = DOCUMENT_FORMAT
    version: int = Field(..., description="Document schema version")
    kind: Literal["hmm", "gmm"]
    K: int = Field(..., ge=1)
    feature_schema: SchemaDocument = Field(..., alias="schema")
    pi: Optional[List[float]] = None
    trans: Optional[List[List[float]]] = None
    weights: Optional[List[float]] = None
    source: Optional[str] = None
    components: List[ComponentDocument] = Field(..., min_length=1)

    model_config = {"populate_by_name": True}


def _schema_section(schema: FeatureSchema) -> dict:
    return {"names": list(schema.names), "outputs": list(schema.outputs)}


def _component_section(component: GaussianComponent) -> dict:
    return {
        "mean": [float(v) for v in component.mean],
        "covariance": [[float(v) for v in row] for row in component.covariance],
    }


def serialize_model(model: AnyModel) -> str:
    """Render a model as a version 1 YAML document."""
    document = {
        "format": DOCUMENT_FORMAT,
        "version": DOCUMENT_VERSION,
        "kind": "hmm" if isinstance(model, HmmModel) else "gmm",
        "K": model.K,
        "schema": _schema_section(model.schema),
    }
    if isinstance(model, HmmModel):
        document["pi"] = [float(v) for v in model.pi]
        document["trans"] = [[float(v) for v in row] for row in model.trans]
    else:
        document["weights"] = [float(v) for v in model.weights]
        document["source"] = model.source
    document["components"] = [_component_section(c) for c in model.components]
    return yaml.safe_dump(document, sort_keys=False, default_flow_style=None, width=120)


def deserialize_model(text: str) -> AnyModel:
    """Parse a model document and check every model invariant.

    A K=1 HMM document may omit pi and trans; they are forced to [1.0] and [[1.0]].

    Raises:
        ModelFormatError: On YAML errors, version mismatch, missing fields or
            invariant violations (the failing invariant is named in the message)
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ModelFormatError(f"Failed to parse model document: {e}") from e

    if not isinstance(raw, dict):
        raise ModelFormatError("Model document must be a mapping")

    version = raw.get("version")
    if version != DOCUMENT_VERSION:
        raise ModelFormatError(
            f"Unsupported model document version {version!r}; expected {DOCUMENT_VERSION}"
        )

    try:
        document = ModelDocument.model_validate(raw)
    except ValidationError as e:
        errors = []
        for error in e.errors():
            field_path = " -> ".join(str(loc) for loc in error["loc"])
            errors.append(f"{field_path}: {error['msg']}")
        raise ModelFormatError("Model document validation failed", errors=errors) from e

    if len(document.components) != document.K:
        raise ModelFormatError(
            f"Document declares K={document.K} but lists {len(document.components)} components"
        )

    try:
        schema = FeatureSchema(
            names=tuple(document.feature_schema.names),
            outputs=tuple(document.feature_schema.outputs),
        )
        components = tuple(
            GaussianComponent(mean=c.mean, covariance=c.covariance) for c in document.components
        )
        if document.kind == "hmm":
            return _build_hmm(document, schema, components)
        return GmmModel(
            weights=_required(document.weights, "weights"),
            components=components,
            schema=schema,
            source=document.source or "independent",
        )
    except ModelInvariantError as e:
        raise ModelFormatError(
            f"Model document violates invariant '{e.invariant}'", errors=[str(e)]
        ) from e
    except (SingularModelError, ValueError) as e:
        raise ModelFormatError("Model document contains invalid parameters", errors=[str(e)]) from e


def _required(value, name: str):
    if value is None:
        raise ModelFormatError(f"Model document is missing '{name}'")
    return value


def _build_hmm(document: ModelDocument, schema: FeatureSchema, components) -> HmmModel:
    pi = document.pi
    trans = document.trans
    if document.K == 1:
        pi = [1.0]
        trans = [[1.0]]
    return HmmModel(
        pi=_required(pi, "pi"),
        trans=_required(trans, "trans"),
        components=components,
        schema=schema,
    )


def save_model(model: AnyModel, path: Path) -> None:
    """Write a model document to disk."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_model(model), encoding="utf-8")


def load_model(path: Path) -> AnyModel:
    """Read a model document from disk.

    Raises:
        FileNotFoundError: If the file does not exist
        ModelFormatError: If the document is invalid
    """
    return deserialize_model(Path(path).read_text(encoding="utf-8"))
