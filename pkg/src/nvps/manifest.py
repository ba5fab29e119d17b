"""Run manifests: resolved parameters, input hashes, output hashes, replay.

A manifest pins everything a run depended on; replaying it re-executes the
embedded configuration and checks that every output file comes back
byte-identical.  No wall-clock data goes in, so manifests themselves are
reproducible too.
"""

import hashlib
import json
import os
import platform

import numpy
import scipy
import yaml

from . import config as config_mod
from .core import VibronicTable, data_path
from .errors import ConfigError

MANIFEST_NAME = "run_manifest.json"


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def data_file_hashes(cfg):
    """Hashes of every data table the run reads."""
    out = {}
    if cfg.nv.vibronic_table is None:
        path = data_path("nv_vibronic.csv")
    else:
        path = cfg.nv.vibronic_table
    out["vibronic_table"] = {"path": str(path), "sha256": _sha256(path)}
    if cfg.particle is not None:
        mat = cfg.particle.material
        if mat in ("Ag", "Au"):
            mpath = data_path({"Ag": "permittivity_ag.csv",
                               "Au": "permittivity_au.csv"}[mat])
        else:
            mpath = mat
        out["permittivity_table"] = {"path": str(mpath), "sha256": _sha256(mpath)}
    return out


def build_manifest(experiment, cfg, resolved, output_paths):
    """Assemble the manifest mapping (deterministic key order via sort on dump)."""
    outputs = {os.path.basename(p): _sha256(p) for p in output_paths}
    doc = {
        "tool": "nvps",
        "version": _package_version(),
        "experiment": experiment,
        "config": None if cfg is None else config_mod.to_mapping(cfg),
        "resolved": resolved,
        "data_files": None if cfg is None else data_file_hashes(cfg),
        "outputs": outputs,
        "environment": {
            "python": platform.python_version(),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "yaml": yaml.__version__,
        },
    }
    return doc


def _package_version():
    from . import __version__
    return __version__


def emit_manifest(experiment, cfg, resolved, output_paths, out_dir):
    """Write run_manifest.json next to the outputs; returns its path."""
    doc = build_manifest(experiment, cfg, resolved, output_paths)
    path = os.path.join(out_dir, MANIFEST_NAME)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def load_manifest(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    for key in ("experiment", "config", "outputs"):
        if key not in doc:
            raise ConfigError(f"manifest {path} missing key {key!r}")
    return doc


def check_outputs(doc, produced_dir):
    """Compare recorded output hashes against files in produced_dir.

    Returns a list of (filename, status) with status 'ok', 'mismatch', or
    'missing'.
    """
    results = []
    for name, digest in sorted(doc["outputs"].items()):
        if name == MANIFEST_NAME:
            continue
        path = os.path.join(produced_dir, name)
        if not os.path.exists(path):
            results.append((name, "missing"))
        elif _sha256(path) == digest:
            results.append((name, "ok"))
        else:
            results.append((name, "mismatch"))
    return results
