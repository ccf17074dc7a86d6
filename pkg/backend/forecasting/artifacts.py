"""
Versioned JSON model artifacts: the fitted model payload plus everything needed to
rebuild its inputs (feature spec or window length, physical bounds).
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from rest_framework import serializers

from .exceptions import InvalidParameterError, MissingRunOutputError, VersionMismatchError
from .families import FAMILIES
from .features import FeatureSpec
from .model_core import Regressor, load_estimator
from .storage import atomic_write_text
from .timeseries_data import PhysicalBounds

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class ArtifactHeaderSerializer(serializers.Serializer):
    format_version = serializers.IntegerField()
    family = serializers.ChoiceField(choices=list(FAMILIES))
    base_seed = serializers.IntegerField()
    best_config = serializers.DictField()
    target_names = serializers.ListField(child=serializers.CharField(), min_length=1)
    feature_spec = serializers.DictField(allow_null=True)
    window = serializers.IntegerField(allow_null=True, min_value=1)
    bounds = serializers.DictField()
    model = serializers.DictField()

    def validate(self, attrs):
        if (attrs["feature_spec"] is None) == (attrs["window"] is None):
            raise serializers.ValidationError("An artifact carries exactly one of feature_spec and window")
        return attrs


@dataclass
class ModelArtifact:
    family: str
    model: Regressor
    base_seed: int
    best_config: Dict[str, Any]
    target_names: Tuple[str, ...]
    bounds: PhysicalBounds
    feature_spec: Optional[FeatureSpec] = None
    window: Optional[int] = None
    format_version: int = FORMAT_VERSION

    def to_document(self):
        return {
            "format_version": self.format_version,
            "family": self.family,
            "base_seed": self.base_seed,
            "best_config": self.best_config,
            "target_names": list(self.target_names),
            "feature_spec": self.feature_spec.to_dict() if self.feature_spec else None,
            "window": self.window,
            "bounds": self.bounds.to_dict(),
            "model": self.model.to_payload(),
        }


def save_artifact(artifact: ModelArtifact, path):
    text = json.dumps(artifact.to_document(), sort_keys=True)
    atomic_write_text(path, text + "\n")
    logger.info("Saved %s artifact to %s", artifact.family, path)
    return Path(path)


def load_artifact(path) -> ModelArtifact:
    path = Path(path)
    if not path.is_file():
        raise MissingRunOutputError(f"Artifact not found: {path}")
    document = json.loads(path.read_text(encoding="utf-8"))

    version = document.get("format_version") if isinstance(document, dict) else None
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path} has format version {version!r}; this build reads version {FORMAT_VERSION}")

    serializer = ArtifactHeaderSerializer(data=document)
    if not serializer.is_valid():
        raise InvalidParameterError(f"Malformed artifact {path}: {json.dumps(serializer.errors, default=str)}")
    header = serializer.validated_data

    return ModelArtifact(
        family=header["family"],
        model=load_estimator(document["model"]),
        base_seed=header["base_seed"],
        best_config=document["best_config"],
        target_names=tuple(header["target_names"]),
        bounds=PhysicalBounds.from_dict(document["bounds"]),
        feature_spec=FeatureSpec.from_dict(document["feature_spec"]) if document["feature_spec"] else None,
        window=header["window"],
        format_version=version,
    )
