"""
Layer-shape manifest IO
"""

from pathlib import Path

from pydantic import ValidationError

from quantpareto.core.errors import CostModelError
from quantpareto.core.models import LayerManifest


def save_manifest(manifest: LayerManifest, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    return path


def load_manifest(path: Path) -> LayerManifest:
    try:
        return LayerManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise CostModelError(f"Failed to read manifest {path}: {e}") from e
    except ValidationError as e:
        raise CostModelError(f"Invalid manifest {path}: {e}") from e
