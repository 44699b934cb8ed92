"""
On-disk artifacts of a pipeline run: atomic writes, content hashes and the
run manifest that lets each stage validate what its upstream stages wrote.
"""

import hashlib
import json
import logging
import os
import tempfile
from importlib import metadata
from pathlib import Path, PurePath
from typing import Dict, Iterable, List, Optional

from tools.errors import DataError, IntegrityError, MissingArtifactError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
TRACKED_PACKAGES = ("numpy", "scipy", "networkx", "scikit-learn", "pandas")


def write_bytes(path, data: bytes) -> Path:
    """Write via a temporary file in the same directory, then rename over the target"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_text(path, text: str) -> Path:
    return write_bytes(path, text.encode("utf-8"))


def write_json(path, obj) -> Path:
    return write_text(path, json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def write_jsonl(path, rows: Iterable[Dict]) -> Path:
    lines = [json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n" for row in rows]
    return write_text(path, "".join(lines))


def read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except ValueError as e:
        raise DataError(f"malformed JSON in {path}: {e}")


def read_jsonl(path) -> List[Dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except ValueError as e:
                raise DataError(f"{path}:{line_no}: malformed JSON line ({e})")
    return rows


def file_hash(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_versions() -> Dict[str, str]:
    versions = {}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


class Manifest:
    """
    manifest.json: per stage, the config hash, input and output hashes and
    package versions. Holds no timestamps, so an unchanged rerun rewrites
    it byte for byte.
    """

    def __init__(self, out_dir, stages: Optional[Dict] = None):
        self.out_dir = Path(out_dir)
        self.stages: Dict[str, Dict] = stages or {}

    @property
    def path(self) -> Path:
        return self.out_dir / MANIFEST_NAME

    @classmethod
    def load(cls, out_dir) -> "Manifest":
        path = Path(out_dir) / MANIFEST_NAME
        if not path.exists():
            return cls(out_dir)
        data = read_json(path)
        return cls(out_dir, data.get("stages", {}))

    def save(self):
        write_json(self.path, {"stages": self.stages})

    def _key(self, path) -> str:
        # inputs outside out_dir get a relative key as well, e.g. ../seeds.txt
        path = Path(path).resolve()
        try:
            return PurePath(os.path.relpath(path, self.out_dir.resolve())).as_posix()
        except ValueError:
            # another drive on Windows
            return path.name

    def record_stage(self, stage: str, config_hash: str, inputs: Iterable, outputs: Iterable,
                     versions: Optional[Dict[str, str]] = None):
        self.stages[stage] = {
            "config_hash": config_hash,
            "inputs": {self._key(p): file_hash(p) for p in sorted(inputs, key=str)},
            "outputs": {self._key(p): file_hash(p) for p in sorted(outputs, key=str)},
            "versions": versions if versions is not None else package_versions(),
        }
        self.save()
        logger.info(f"Manifest: recorded stage '{stage}' ({len(self.stages[stage]['outputs'])} outputs)")

    def verify_inputs(self, stage: str, required: Dict[str, str]) -> List[Path]:
        """
        Check artifacts a stage consumes.

        Args:
            stage: the consuming stage (for log messages)
            required: artifact path relative to out_dir -> stage that produces it

        Returns:
            Absolute paths of the verified artifacts, in the order given
        """
        paths = []
        for artifact, producer in required.items():
            path = self.out_dir / artifact
            record = self.stages.get(producer)
            if not path.exists() or record is None or artifact not in record["outputs"]:
                raise MissingArtifactError(artifact, producer)
            if file_hash(path) != record["outputs"][artifact]:
                raise IntegrityError(
                    f"artifact '{artifact}' does not match the hash recorded by stage '{producer}'; "
                    f"rerun '{producer}'")
            paths.append(path)
        logger.info(f"Stage '{stage}': {len(paths)} input artifact(s) verified")
        return paths
