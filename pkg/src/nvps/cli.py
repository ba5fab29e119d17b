"""Command-line entry: nvps {odmr, trace, spectrum, sweep, fom, replay}.

Every run writes plain CSV (comment-prefixed headers), a run_manifest.json
pinning the resolved configuration and output hashes, and optionally a small
matplotlib companion script.  Exit codes: 0 success, 2 configuration errors,
3 solver failures.
"""

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import experiments, manifest
from .config import parse_config
from .constants import EV
from .errors import ConfigError, SolverError

_PLOT_TEMPLATES = {
    "odmr": """\
import matplotlib.pyplot as plt
import numpy as np

data = np.loadtxt("odmr.csv", delimiter=",", comments="#")
plt.plot(data[:, 0], data[:, 1])
plt.xlabel("microwave frequency (GHz)")
plt.ylabel("PL rate (1/s)")
plt.tight_layout()
plt.savefig("odmr.png", dpi=160)
""",
    "trace": """\
import matplotlib.pyplot as plt
import numpy as np

data = np.loadtxt("trace.csv", delimiter=",", comments="#")
plt.plot(data[:, 0], data[:, 1], label="init |0>")
plt.plot(data[:, 0], data[:, 2], label="init |+-1>")
plt.xlabel("time (us)")
plt.ylabel("PL rate (1/s)")
plt.legend()
plt.tight_layout()
plt.savefig("trace.png", dpi=160)
""",
    "spectrum": """\
import matplotlib.pyplot as plt
import numpy as np

data = np.loadtxt("spectrum.csv", delimiter=",", comments="#")
plt.plot(data[:, 0], data[:, 1])
plt.xlabel("photon energy (eV)")
plt.ylabel("emission intensity (arb.)")
plt.tight_layout()
plt.savefig("spectrum.png", dpi=160)
""",
    "sweep": """\
import matplotlib.pyplot as plt
import numpy as np

data = np.loadtxt("sweep.csv", delimiter=",", comments="#", usecols=(0, 6, 7))
plt.loglog(data[:, 0], data[:, 1], "o-", label="baseline enhancement")
plt.loglog(data[:, 0], data[:, 2], "s-", label="depth enhancement")
plt.xlabel("intensity (uW/um^2)")
plt.ylabel("enhancement")
plt.legend()
plt.tight_layout()
plt.savefig("sweep.png", dpi=160)
""",
}


def _write_atomic(path, text):
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv(path, header_lines, columns, rows):
    lines = [f"# {line}" for line in header_lines]
    lines.append(f"# columns: {','.join(columns)}")
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    _write_atomic(path, "\n".join(lines) + "\n")


def _cell(v):
    if isinstance(v, str):
        return v.replace(",", ";")
    if v is None:
        return ""
    return repr(float(v))


def _resolved_info(asm):
    return {
        "photon_energy_eV": asm.params.drive.photon_energy / EV,
        "field_amplitude_V_per_m": asm.params.drive.e0,
        "dim": asm.scheme.dim,
        "collapse_channels": len(asm.channels),
        "far_field_scale": asm.far_field_scale,
    }


def run_experiment(name, cfg, out_dir, threads=1, plot_script=False):
    """Execute one experiment; returns (resolved-info, list of output paths)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    if name == "odmr":
        asm = experiments.assemble(cfg)
        curve = experiments.odmr_sweep(asm, threads=threads)
        path = os.path.join(out_dir, "odmr.csv")
        _csv(path, ["nvps odmr sweep"],
             ["microwave_frequency_GHz", "pl_rate_per_s"],
             zip(curve.freq_hz / 1e9, curve.pl))
        paths.append(path)
        resolved = _resolved_info(asm)

    elif name == "trace":
        tr = experiments.time_domain_readout(cfg)
        path = os.path.join(out_dir, "trace.csv")
        _csv(path, [
            "nvps time-domain readout",
            f"pl_steady_per_s = {tr.pl_ss!r}",
            f"stabilization_zero_us = {tr.stabilization_zero * 1e6!r}",
            f"stabilization_pm1_us = {tr.stabilization_pm1 * 1e6!r}",
            f"contrast_area = {tr.contrast_area!r}",
        ], ["time_us", "pl_init_zero_per_s", "pl_init_pm1_per_s", "delta_per_s"],
            zip(tr.t * 1e6, tr.pl_zero, tr.pl_pm1, tr.delta))
        paths.append(path)
        b_mw = cfg.spin.microwave_field if cfg.experiment.trace.microwave else 0.0
        resolved = _resolved_info(experiments.assemble(cfg, b_mw=b_mw))

    elif name == "spectrum":
        asm = experiments.assemble(cfg)
        energy, intensity = experiments.emission_experiment(cfg, assembly=asm)
        path = os.path.join(out_dir, "spectrum.csv")
        _csv(path, [f"nvps emission spectrum ({cfg.experiment.spectrum.mode} field)"],
             ["photon_energy_eV", "intensity_arb"],
             zip(energy / EV, intensity))
        paths.append(path)
        resolved = _resolved_info(asm)

    elif name == "sweep":
        rows = experiments.intensity_sweep(cfg, threads=threads)
        table = []
        for row in rows:
            if row.error is not None:
                table.append([row.intensity / 1e6] + [float("nan")] * 7 + [row.error])
                continue
            fom = row.fom
            table.append([
                row.intensity / 1e6, fom.baseline, fom.depth, fom.contrast,
                fom.fwhm_hz / 1e6, fom.sensitivity,
                fom.baseline_enhancement, fom.depth_enhancement, ""])
        path = os.path.join(out_dir, "sweep.csv")
        _csv(path, ["nvps intensity sweep (relative to the particle-free reference)"],
             ["intensity_uW_um2", "baseline_per_s", "depth_per_s", "contrast",
              "fwhm_MHz", "sensitivity_T_per_sqrtHz", "baseline_enhancement",
              "depth_enhancement", "error"],
             table)
        paths.append(path)
        resolved = _resolved_info(experiments.assemble(cfg))

    else:
        raise ConfigError(f"unknown experiment {name!r}")

    if plot_script and name in _PLOT_TEMPLATES:
        spath = os.path.join(out_dir, f"{name}_plot.py")
        _write_atomic(spath, _PLOT_TEMPLATES[name])
        paths.append(spath)
    return resolved, paths


def _load_curve_csv(path):
    try:
        data = np.loadtxt(path, delimiter=",", comments="#")
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read curve CSV {path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] < 2:
        raise ConfigError(f"{path}: expected two CSV columns (frequency, PL)")
    return experiments.OdmrCurve(freq_hz=data[:, 0] * 1e9, pl=data[:, 1])


def _cmd_fom(args):
    curve = _load_curve_csv(args.curve)
    reference = _load_curve_csv(args.reference) if args.reference else None
    fom = experiments.odmr_figures_of_merit(curve, reference=reference)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "fom.json")
    doc = {
        "baseline_per_s": fom.baseline,
        "depth_per_s": fom.depth,
        "contrast": fom.contrast,
        "center_GHz": fom.center_hz / 1e9,
        "fwhm_MHz": fom.fwhm_hz / 1e6,
        "sensitivity_T_per_sqrtHz": fom.sensitivity,
        "baseline_enhancement": fom.baseline_enhancement,
        "depth_enhancement": fom.depth_enhancement,
    }
    _write_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    resolved = {"curve": args.curve, "reference": args.reference}
    manifest.emit_manifest("fom", None, resolved, [path], out_dir)
    print(path)
    return 0


def _cmd_replay(args):
    doc = manifest.load_manifest(args.manifest)
    if doc["experiment"] not in ("odmr", "trace", "spectrum", "sweep"):
        raise ConfigError(f"experiment {doc['experiment']!r} is not replayable")
    cfg = parse_config(doc["config"])
    with tempfile.TemporaryDirectory(prefix="nvps-replay-") as tmp:
        plot = any(name.endswith("_plot.py") for name in doc["outputs"])
        run_experiment(doc["experiment"], cfg, tmp, threads=args.threads,
                       plot_script=plot)
        results = manifest.check_outputs(doc, tmp)
    ok = True
    for name, status in results:
        print(f"{status:8s} {name}")
        ok = ok and status == "ok"
    return 0 if ok else 1


def _cmd_run(args):
    cfg = parse_config(args.config)
    out_dir = args.out or cfg.output_directory
    resolved, paths = run_experiment(args.command, cfg, out_dir,
                                     threads=args.threads,
                                     plot_script=args.plot_script)
    mpath = manifest.emit_manifest(args.command, cfg, resolved, paths, out_dir)
    for p in paths + [mpath]:
        print(p)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nvps",
        description="Spin-resolved emitter-nanoparticle simulations: ODMR, "
                    "readout traces, emission spectra, and figures of merit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML configuration file")
        p.add_argument("--out", default=None,
                       help="output directory (default: config output.directory)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for sweep grids")
        p.add_argument("--plot-script", action="store_true",
                       help="also write a matplotlib companion script")
        return p

    add_run("odmr", "steady-state PL against microwave frequency")
    add_run("trace", "time-domain readout from spin 0 and +-1 initialisations")
    add_run("spectrum", "emission spectrum from two-time correlators")
    add_run("sweep", "ODMR figures of merit against drive intensity")

    p_fom = sub.add_parser("fom", help="figures of merit from saved ODMR curves")
    p_fom.add_argument("--curve", required=True, help="curve CSV (GHz, PL)")
    p_fom.add_argument("--reference", default=None,
                       help="reference curve CSV for enhancement ratios")
    p_fom.add_argument("--out", default=".", help="output directory")

    p_rep = sub.add_parser("replay", help="re-run a manifest and verify outputs")
    p_rep.add_argument("--manifest", required=True, help="run_manifest.json path")
    p_rep.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fom":
            return _cmd_fom(args)
        if args.command == "replay":
            return _cmd_replay(args)
        return _cmd_run(args)
    except ConfigError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 2
    except SolverError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr, indent=2)
        sys.stderr.write("\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
