"""Command-line interface: ``sdn {render,convolve,analyze,compare,matrix,estimate}``.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime or
numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from . import analysis, scattering
from .config import DEFAULT_CONFIG, ToolkitConfig, load_config
from .geometry import SceneError
from .io import AudioBuffer, AudioFormatError, export_curve, load_audio, load_matrix, save_matrix, write_audio
from .ism import render_rir_ism
from .network import NumericalError, build_network
from .rir import ImpulseResponse

log = logging.getLogger("sdn_reverb")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
CLI_MATRIX_KINDS = ("isotropic", "householder", "orthogonal", "permutation", "circulant", "admittance")
RENDER_CHUNK_S = 1.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # bad arguments are validation errors; argparse would exit with 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _config(args) -> ToolkitConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else DEFAULT_CONFIG.model_copy(deep=True)
    if getattr(args, "seed", None) is not None:
        cfg.matrix.seed = args.seed
    if getattr(args, "matrix", None):
        cfg.matrix.kind = args.matrix
    if getattr(args, "duration", None) is not None:
        cfg.render.duration = args.duration
    if getattr(args, "no_direct_path", False):
        cfg.scene.direct_path = False
    if getattr(args, "format", None):
        cfg.output.format = args.format
    if getattr(args, "out", None):
        cfg.output.path = args.out
    return cfg


def _network(cfg: ToolkitConfig):
    return build_network(
        cfg.scene.to_scene(),
        cfg.matrix.kind,
        cfg.matrix.seed,
        admittance=cfg.matrix.admittances,
        air_absorption=cfg.render.air_absorption,
    )


def _render(cfg: ToolkitConfig, method: str = "sdn") -> ImpulseResponse:
    scene = cfg.scene.to_scene()
    if method == "ism":
        return render_rir_ism(scene, cfg.render.duration)
    net = _network(cfg)
    n = int(math.ceil(cfg.render.duration * scene.sample_rate))
    chunk = int(RENDER_CHUNK_S * scene.sample_rate)
    x = np.zeros(n)
    x[0] = 1.0
    out = []
    for start in range(0, n, chunk):
        out.append(net.process(x[start : start + chunk]))
        log.info("rendered %.1f / %.1f s", min(n, start + chunk) / scene.sample_rate, cfg.render.duration)
    return ImpulseResponse(np.concatenate(out), scene.sample_rate)


def _write_rir(rir: ImpulseResponse, path: str, fmt: str):
    if fmt == "csv":
        export_curve(path, {"time_s": rir.times, "value": rir.samples})
    else:
        write_audio(path, AudioBuffer.mono(rir.samples, rir.sample_rate))


def cmd_render(args) -> int:
    cfg = _config(args)
    rir = _render(cfg, args.method)
    path = cfg.output.path or f"rir.{cfg.output.format}"
    _write_rir(rir, path, cfg.output.format)
    if args.dump_network:
        Path(args.dump_network).write_text(json.dumps(_network(cfg).describe(), indent=2))
    print(f"wrote {len(rir)} samples to {path}")
    return EXIT_OK


def cmd_convolve(args) -> int:
    cfg = _config(args)
    audio = load_audio(args.input)
    scene = cfg.scene.to_scene()
    if audio.sample_rate != scene.sample_rate:
        cfg.scene.sample_rate = float(audio.sample_rate)
        log.info("using the input sample rate %d Hz", audio.sample_rate)
    channels = []
    for ch in audio.data:
        net = _network(cfg)
        tail = np.zeros(int(math.ceil(args.tail * audio.sample_rate)))
        channels.append(net.process(np.concatenate([ch, tail])))
    out = np.vstack(channels)
    peak = np.max(np.abs(out))
    if args.normalize and peak > 0:
        out = out / peak * 0.99
    path = cfg.output.path or "wet.wav"
    clipped = write_audio(path, AudioBuffer(out, audio.sample_rate, args.encoding or audio.encoding))
    print(f"wrote {out.shape[1]} frames x {out.shape[0]} channels to {path}" + (f" ({clipped} clipped)" if clipped else ""))
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _config(args)
    if args.input:
        audio = load_audio(args.input)
        rir = ImpulseResponse(audio.data[0], audio.sample_rate)
    else:
        rir = _render(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.analysis
    summary: dict = {}
    edc = analysis.schroeder_edc(rir)
    if spec.edc:
        export_curve(out / "edc.csv", {"time_s": rir.times, "value": edc})
    if spec.t60:
        try:
            summary["t60_s"] = analysis.t60_from_edc(edc, rir.sample_rate, *spec.fit_range_db).t60
        except analysis.InsufficientDecayError as exc:
            summary["t60_s"] = None
            summary["t60_error"] = str(exc)
    if spec.ned:
        ned = analysis.ned_profile(rir, spec.ned_window, spec.ned_hop)
        export_curve(
            out / "ned.csv",
            {"time_s": ned.times, "value": ned.values},
            comments=[f"window_s={ned.window_s!r} hop_s={ned.hop_s!r} window=rectangular"],
        )
        summary["ned_crossings_s"] = {
            str(lv): (None if math.isnan(t := ned.crossing_time(lv)) else t) for lv in (0.3, 0.75)
        }
    if spec.octave_bands:
        bands = analysis.octave_band_t60(rir, spec.octave_bands, *spec.fit_range_db)
        export_curve(out / "bands.csv", {"band_hz": [b.band_hz for b in bands], "t60_s": [b.t60 for b in bands]})
        summary["band_t60_s"] = {str(b.band_hz): (None if b.error else b.t60) for b in bands}
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_compare(args) -> int:
    from .compare import compare_scene, compare_trials

    cfg = _config(args)
    scene = cfg.scene.to_scene()
    if args.trials > 1:
        report = compare_trials(scene, cfg.render.duration, args.trials, cfg.matrix.seed, cfg.matrix.kind)
    else:
        report = compare_scene(scene, cfg.render.duration, cfg.matrix.kind, cfg.matrix.seed)
    text = json.dumps(report, indent=2)
    if cfg.output.path:
        Path(cfg.output.path).write_text(text)
    print(text)
    return EXIT_OK


def _emit_matrix(A, out):
    if out:
        save_matrix(out, A)
    else:
        np.savetxt(sys.stdout, np.asarray(A), delimiter=",", fmt="%.17g")


def cmd_matrix(args) -> int:
    op = args.op
    if op == "isotropic":
        _emit_matrix(scattering.isotropic_matrix(args.size).entries, args.out)
    elif op == "random":
        _emit_matrix(scattering.matrix_for_kind(args.kind, args.size, args.seed).entries, args.out)
    elif op == "householder":
        if not args.admittance:
            raise UsageError("householder needs --admittance")
        _emit_matrix(scattering.normalized_householder(args.admittance).entries, args.out)
    elif op == "admittance":
        if not args.admittance:
            raise UsageError("admittance needs --admittance")
        _emit_matrix(scattering.admittance_scattering(args.admittance).entries, args.out)
    elif op == "verify":
        A = load_matrix(_need_input(args))
        Y = load_matrix(args.weight) if args.weight else "auto"
        verdict = scattering.is_lossless(A, Y, args.tol)
        result = {
            "lossless": verdict.lossless,
            "residual": verdict.residual,
            "reason": verdict.reason,
            "isotropic": scattering.check_isotropic_uniqueness(A, max(args.tol, 1e-9)),
        }
        if verdict.Y is not None and np.isrealobj(verdict.Y):
            result["Y"] = np.asarray(verdict.Y).tolist()
        print(json.dumps(result, indent=2))
        return EXIT_OK if verdict.lossless else EXIT_INVALID
    elif op == "nearest-orthogonal":
        _emit_matrix(scattering.nearest_orthogonal(load_matrix(_need_input(args))).entries, args.out)
    elif op == "nearest-householder":
        fit = scattering.nearest_householder(load_matrix(_need_input(args)))
        if fit.degenerate:
            log.warning("top eigenvalue of D + D^T is repeated; the reflection vector is not unique")
        print("# v = " + ",".join(f"{v:.17g}" for v in fit.v), file=sys.stderr)
        _emit_matrix(fit.matrix.entries, args.out)
    return EXIT_OK


def _need_input(args):
    if not args.input:
        raise UsageError(f"matrix {args.op} needs --input")
    return args.input


def estimate_tables(fs: float = 44100.0, frame_rate: float = 50.0) -> dict:
    room = tuple(v * analysis.FEET for v in (10.0, 15.0, 12.5))
    orders = list(range(2, 21))
    t60s = [round(0.1 * k, 1) for k in range(1, 21)]
    sdn5 = analysis.sdn_flops(5, 1, fs)
    return {
        "structure_order": {
            "order": orders,
            "sdn_mflops": [analysis.sdn_flops(k, 1, fs) / 1e6 for k in orders],
            "fdn_mflops": [analysis.fdn_flops(q, 1, fs) / 1e6 for q in orders],
        },
        "reverberation_time": {
            "t60_s": t60s,
            "sdn_mflops": [sdn5 / 1e6] * len(t60s),
            "static_convolution_mflops": [analysis.overlap_add_flops(frame_rate, t, fs, dynamic=False) / 1e6 for t in t60s],
            "dynamic_ism_mflops": [analysis.dynamic_ism_flops(room, t, frame_rate, fs) / 1e6 for t in t60s],
        },
        "memory": {
            "cube_edge_m": 5.0,
            "sample_rate": 40000.0,
            "bits_per_sample": 32,
            "bound_kB": analysis.memory_bound(6, 32, 40000.0, 343.0, math.sqrt(3) * 5.0) / 8 / 1000,
        },
    }


def cmd_estimate(args) -> int:
    tables = estimate_tables(args.sample_rate, args.frame_rate)
    if args.format == "csv":
        out = Path(args.out or ".")
        out.mkdir(parents=True, exist_ok=True)
        export_curve(out / "flops_vs_order.csv", tables["structure_order"])
        export_curve(out / "flops_vs_t60.csv", tables["reverberation_time"])
        print(f"wrote flops tables to {out}")
    else:
        so, rt = tables["structure_order"], tables["reverberation_time"]
        print("order  SDN MFLOPS  FDN MFLOPS")
        for k, s, f in zip(so["order"], so["sdn_mflops"], so["fdn_mflops"]):
            print(f"{k:5d}  {s:10.2f}  {f:10.2f}")
        print("\nT60 s  SDN MFLOPS  static conv MFLOPS  dynamic ISM MFLOPS  ratio")
        for t, s, c, d in zip(rt["t60_s"], rt["sdn_mflops"], rt["static_convolution_mflops"], rt["dynamic_ism_mflops"]):
            print(f"{t:5.1f}  {s:10.2f}  {c:18.2f}  {d:18.2f}  {d / s:5.1f}")
        print(f"\nmemory bound, 5 m cube, 40 kHz, 32-bit: {tables['memory']['bound_kB']:.1f} kB")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sdn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def scene_opts(p, out_default_help="output path"):
        p.add_argument("--config", help="YAML experiment file (a 5 m cube is used if omitted)")
        p.add_argument("--seed", type=int)
        p.add_argument("--duration", type=float, help="seconds")
        p.add_argument("--matrix", choices=CLI_MATRIX_KINDS)
        p.add_argument("--no-direct-path", action="store_true")
        p.add_argument("--out", help=out_default_help)

    p = sub.add_parser("render", help="render a room impulse response")
    scene_opts(p)
    p.add_argument("--format", choices=("wav", "csv"))
    p.add_argument("--method", choices=("sdn", "ism"), default="sdn")
    p.add_argument("--dump-network", metavar="PATH", help="write the network description as JSON")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("convolve", help="process an audio file through the network")
    scene_opts(p)
    p.add_argument("--input", required=True)
    p.add_argument("--tail", type=float, default=1.0, help="seconds of reverb tail to append")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--encoding", choices=("pcm16", "pcm24", "float32"))
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("analyze", help="EDC, T60, NED and octave-band T60 of an RIR")
    scene_opts(p)
    p.add_argument("--input", help="RIR audio file (rendered from the config if omitted)")
    p.add_argument("--out-dir", default="analysis")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="network versus image-source report")
    scene_opts(p)
    p.add_argument("--trials", type=int, default=1)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("matrix", help="construct, verify or fit scattering matrices")
    p.add_argument(
        "op",
        choices=("isotropic", "random", "householder", "admittance", "verify", "nearest-orthogonal", "nearest-householder"),
    )
    p.add_argument("--size", type=int, default=5)
    p.add_argument("--kind", choices=("orthogonal", "permutation", "circulant"), default="orthogonal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--admittance", type=float, nargs="+")
    p.add_argument("--input", help="CSV matrix")
    p.add_argument("--weight", help="CSV weighting matrix Y for verify (auto if omitted)")
    p.add_argument("--tol", type=float, default=scattering.LOSSLESS_TOL)
    p.add_argument("--out")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("estimate", help="operation-count and memory tables")
    p.add_argument("--sample-rate", type=float, default=44100.0)
    p.add_argument("--frame-rate", type=float, default=50.0)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, SceneError, AudioFormatError, UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, RuntimeError, OSError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
