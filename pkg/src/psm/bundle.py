"""Model bundle: a zip container holding the static model, every fitted
density, the fit report, and provenance.

Serialization is canonical (sorted keys, shortest-round-trip floats,
fixed zip metadata), so identical inputs and seeds produce byte-
identical bundles.  The provenance timestamp is only included when the
caller supplies one, keeping the default output deterministic.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass, field

from psm.errors import BundleFormatError
from psm.network import ModelNetwork, network_from_dict, network_to_dict
from psm.structure import StaticModel, from_json_dict, to_json_dict

BUNDLE_FORMAT = "psm-bundle/1"
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


@dataclass
class ModelBundle:
    static: StaticModel
    network: ModelNetwork
    fit_report: dict
    provenance: dict = field(default_factory=dict)
    source: str | None = None
    content_hash: str = ""

    def node_ids(self) -> list[str]:
        return sorted(self.network.nodes)


def _canon(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False).encode("utf-8")


def save_bundle(bundle: ModelBundle, path) -> str:
    """Write the bundle; returns its content hash."""
    entries: list[tuple[str, bytes]] = [
        ("static.json", _canon(to_json_dict(bundle.static))),
        ("network.json", _canon(network_to_dict(bundle.network))),
        ("fit_report.json", _canon(bundle.fit_report)),
    ]
    if bundle.source is not None:
        entries.append(("source.ml0", bundle.source.encode("utf-8")))
    digest = hashlib.sha256()
    for name, data in entries:
        digest.update(name.encode())
        digest.update(data)
    content_hash = digest.hexdigest()
    manifest = {
        "format": BUNDLE_FORMAT,
        "content_hash": content_hash,
        "provenance": bundle.provenance,
        "entries": [name for name, _ in entries],
    }
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_DEFLATED, compresslevel=9) as zf:
        for name, data in [("manifest.json", _canon(manifest))] + entries:
            info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, data)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())
    bundle.content_hash = content_hash
    return content_hash


def load_bundle(path) -> ModelBundle:
    try:
        zf = zipfile.ZipFile(path, "r")
    except (OSError, zipfile.BadZipFile) as exc:
        raise BundleFormatError(f"cannot open bundle {path!r}: {exc}")
    with zf:
        try:
            manifest = json.loads(zf.read("manifest.json"))
        except KeyError:
            raise BundleFormatError("bundle has no manifest.json")
        fmt = manifest.get("format")
        if fmt != BUNDLE_FORMAT:
            raise BundleFormatError(
                f"unsupported bundle format {fmt!r}; this build reads {BUNDLE_FORMAT!r}"
            )
        static = from_json_dict(json.loads(zf.read("static.json")))
        network = network_from_dict(json.loads(zf.read("network.json")))
        fit_report = json.loads(zf.read("fit_report.json"))
        source = None
        if "source.ml0" in zf.namelist():
            source = zf.read("source.ml0").decode("utf-8")
    return ModelBundle(
        static=static,
        network=network,
        fit_report=fit_report,
        provenance=manifest.get("provenance", {}),
        source=source,
        content_hash=manifest.get("content_hash", ""),
    )


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
