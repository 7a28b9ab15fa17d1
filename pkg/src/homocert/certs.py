"""Certificate records: canonical JSON with content hashes.

Certificates are deterministic for a fixed config and seed: keys are
sorted, no timestamps, and every number comes from exact arithmetic.
"""

from __future__ import annotations

import hashlib
import json

SCHEMA = "homocert-certificate-v1"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def content_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def assemble(kind: str, config: dict, payload: dict) -> dict:
    cert = {
        "schema": SCHEMA,
        "kind": kind,
        "config": config,
        "payload": payload,
        "hashes": {
            "config": content_hash(config),
            "payload": content_hash(payload),
        },
    }
    cert["hashes"]["certificate"] = content_hash(
        {"config": cert["hashes"]["config"], "payload": cert["hashes"]["payload"]})
    return cert


def render(cert: dict) -> str:
    return json.dumps(cert, sort_keys=True, indent=2) + "\n"


def write(path, cert: dict):
    with open(path, "w") as fh:
        fh.write(render(cert))
