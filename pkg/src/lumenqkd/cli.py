"""Command-line interface.

Sub-commands:
    simulate     Run a simulated session and write its logs
    postprocess  Synchronize, sift and report QBER and decoy statistics
    analyze      Side-channel mutual information from per-state histograms
    profiles     Write the synthetic per-state profiles

Exit codes: 0 success, 2 invalid input, 3 synchronization rejected.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from lumenqkd import __version__
from lumenqkd.config import SessionConfig
from lumenqkd.exceptions import ConfigurationError, LumenQKDError, SyncRejectedError
from lumenqkd.logs import (
    RunManifest,
    file_digest,
    read_announcements,
    read_detection_log,
    read_eve_log,
    read_packed_preparation_log,
    read_preparation_log,
    write_announcements,
    write_count_rates,
    write_detection_log,
    write_eve_log,
    write_json,
    write_key,
    write_packed_preparation_log,
    write_preparation_log,
    write_truth_log,
)
from lumenqkd.model import LEGAL_CLASSES, VACUUM_CODE, SideChannelAxis
from lumenqkd.postprocess import (
    announce,
    assign_slots,
    compute_qber,
    decoy_statistics,
    pair_detections,
    recover_clock_offset,
    sift,
    unwrap_tags,
)
from lumenqkd.session import binned_count_rates, simulate_session
from lumenqkd.sidechannel import (
    BiasConvention,
    ProtocolProbabilities,
    analyze_side_channel,
    plug_in_mutual_information,
    profile_matrix,
    protocol_from_config,
)
from lumenqkd.transmitter import (
    adjust_profile,
    align_temporal_profiles,
    default_profiles,
    load_profile_csv,
    write_profile_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SYNC_REJECTED = 3

PREPARATION_FILE = "preparation.csv"
PACKED_PREPARATION_FILE = "preparation.bin"
ANNOUNCEMENT_FILE = "announcements.csv"
DETECTION_FILE = "detections.csv"
EVE_FILE = "eve.csv"
TRUTH_FILE = "truth.csv"
COUNT_RATE_FILE = "count_rates.csv"
MANIFEST_FILE = "manifest.json"
REPORT_FILE = "report.json"
KEY_FILE = "key.csv"
MI_REPORT_FILE = "mi_report.json"
MI_HISTOGRAM_FILE = "mi_samples_hist.csv"
DISTRIBUTION_FILE = "distributions.csv"


def _load_config(args: argparse.Namespace, **overrides) -> SessionConfig:
    if getattr(args, "seed", None) is not None:
        overrides["rng_seed"] = args.seed
    return SessionConfig.from_env(args.config, **overrides)


def _prepare_out(path: str | Path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    """Simulate a session and write every log plus the manifest."""
    overrides = {}
    if args.axis is not None:
        overrides["eve_axis"] = SideChannelAxis(args.axis)
    config = _load_config(args, **overrides)
    if args.duration <= 0:
        raise ValueError("duration must be positive")
    out = _prepare_out(args.out)

    session = simulate_session(config, args.duration)
    manifest = RunManifest(
        command="simulate",
        config_path=args.config,
        config=config.model_dump(mode="json"),
        parameters={"duration": args.duration, "binary": bool(args.binary)},
        rng_seed=config.rng_seed,
    )
    run_id = manifest.run_id

    if args.binary:
        write_packed_preparation_log(out / PACKED_PREPARATION_FILE, session.codes)
        manifest.outputs.append(PACKED_PREPARATION_FILE)
    else:
        write_preparation_log(out / PREPARATION_FILE, session.codes, run_id)
        manifest.outputs.append(PREPARATION_FILE)

    detections = session.detections
    write_announcements(out / ANNOUNCEMENT_FILE, announce(session.codes), run_id)
    write_detection_log(out / DETECTION_FILE, detections.detectors, detections.raw_tags, run_id)
    write_truth_log(out / TRUTH_FILE, detections.true_time_ps, detections.slot_index, run_id)
    starts, rates = binned_count_rates(
        detections.true_time_ps, detections.detectors, args.duration, config.count_rate_bin
    )
    write_count_rates(out / COUNT_RATE_FILE, starts, rates, run_id)
    manifest.outputs.extend([ANNOUNCEMENT_FILE, DETECTION_FILE, TRUTH_FILE, COUNT_RATE_FILE])
    if session.eve_bins is not None:
        write_eve_log(out / EVE_FILE, session.eve_bins, session.eve_axis, run_id)
        manifest.outputs.append(EVE_FILE)

    manifest.write(out / MANIFEST_FILE)
    logger.info("Wrote %d files to %s (run %s)", len(manifest.outputs) + 1, out, run_id)
    return EXIT_OK


def _read_codes(path: Path) -> np.ndarray:
    if path.suffix == ".bin":
        return read_packed_preparation_log(path)
    return read_preparation_log(path)


def _resolve_inputs(args: argparse.Namespace) -> dict[str, Path]:
    run_dir = Path(args.run_dir) if args.run_dir else None

    def pick(value: str | None, *defaults: str) -> Path | None:
        if value:
            return Path(value)
        if run_dir is None:
            return None
        for name in defaults:
            if (run_dir / name).exists():
                return run_dir / name
        return None

    inputs = {
        "preparation": pick(args.prep, PREPARATION_FILE, PACKED_PREPARATION_FILE),
        "announcements": pick(args.announcements, ANNOUNCEMENT_FILE),
        "detections": pick(args.detections, DETECTION_FILE),
        "eve": pick(args.eve, EVE_FILE),
    }
    required = {
        "preparation": "--prep",
        "announcements": "--announcements",
        "detections": "--detections",
    }
    for name, flag in required.items():
        if inputs[name] is None:
            raise ConfigurationError(f"no {name} log given (use {flag} or --run-dir)")
    return {k: v for k, v in inputs.items() if v is not None}


def cmd_postprocess(args: argparse.Namespace) -> int:
    """Synchronize, sift and write the QBER/decoy report and the key file.

    Raises:
        SyncRejectedError: After writing the report, when synchronization is rejected
    """
    config = _load_config(args)
    inputs = _resolve_inputs(args)
    out = _prepare_out(args.out)

    codes = _read_codes(inputs["preparation"])
    announcements = read_announcements(inputs["announcements"])
    if len(announcements) != codes.size:
        raise ConfigurationError(
            f"announcements list {len(announcements)} slots, preparation log {codes.size}"
        )
    detectors, tags = read_detection_log(inputs["detections"])

    manifest = RunManifest(
        command="postprocess",
        config_path=args.config,
        config=config.model_dump(mode="json"),
        input_digests={name: file_digest(path) for name, path in inputs.items()},
        rng_seed=config.rng_seed,
    )
    run_id = manifest.run_id

    unwrapped = unwrap_tags(tags, config.tagger_tick_ps, config.tagger_bits)
    sync = recover_clock_offset(announcements, unwrapped.times_ps, detectors, config)
    report: dict[str, object] = {
        "run_id": run_id,
        "sync": sync.to_dict(),
        "unwrap": {
            "rollovers": unwrapped.rollovers,
            "segments": len(unwrapped.segments),
            "ambiguous_gaps": int(unwrapped.ambiguous.size),
        },
        "n_slots": int(codes.size),
        "n_detections": int(detectors.size),
    }
    manifest.outputs.append(REPORT_FILE)

    if not sync.accepted:
        write_json(out / REPORT_FILE, report)
        manifest.write(out / MANIFEST_FILE)
        raise SyncRejectedError(f"synchronization rejected: {sync.reason}")

    slots = assign_slots(unwrapped.times_ps, sync, config, codes.size)
    paired = pair_detections(codes, slots, detectors)
    sifted = sift(paired)
    qber = compute_qber(sifted, config.qber_limit)
    active_seconds = codes.size * config.slot_period
    report["sifting"] = {
        "key_records": len(sifted.key),
        "parameter_records": len(sifted.parameter),
        "background_records": len(sifted.background),
        "discarded": sifted.discarded,
        "double_clicks": sifted.double_clicks,
        "unassigned": paired.unassigned,
        "active_seconds": active_seconds,
        "raw_key_rate": sifted.key_rate(active_seconds),
    }
    report["qber"] = qber.to_dict()
    try:
        report["decoy"] = decoy_statistics(paired, announcements, config, sifted).to_dict()
    except LumenQKDError as e:
        logger.warning("Decoy analysis skipped: %s", e)
        report["decoy"] = {"error": str(e)}

    if "eve" in inputs:
        eve_bins, axis = read_eve_log(inputs["eve"], codes.size)
        observed = eve_bins[sifted.key.slot_index]
        seen = observed >= 0
        if seen.any():
            estimate = plug_in_mutual_information(sifted.bob_key_bits[seen], observed[seen])
            report["eve"] = {
                "axis": axis.value if axis is not None else None,
                "n": estimate.n,
                "I": estimate.i_bits,
                "sigma": estimate.sigma_bits,
                "bias": estimate.bias_bits,
            }

    write_key(out / KEY_FILE, sifted.bob_key_bits, run_id)
    manifest.outputs.append(KEY_FILE)
    write_json(out / REPORT_FILE, report)
    manifest.write(out / MANIFEST_FILE)
    logger.info("%s; raw key rate %.4g bit/s", qber.message, report["sifting"]["raw_key_rate"])
    return EXIT_OK


def _write_histogram(path: Path, counts: np.ndarray, edges: np.ndarray, run_id: str) -> None:
    with open(path, "w", newline="") as f:
        f.write(f"# run: {run_id}\n")
        f.write("bin_left,bin_right,count\n")
        for lo, hi, n in zip(edges[:-1], edges[1:], counts, strict=True):
            f.write(f"{lo!r},{hi!r},{int(n)}\n")


def _write_distributions(
    path: Path, centers: np.ndarray, p_e: np.ndarray, rows: np.ndarray, labels: list[str], run_id
) -> None:
    with open(path, "w", newline="") as f:
        f.write(f"# run: {run_id}\n")
        f.write(",".join(["bin_center", "p_e_given_s", *labels]) + "\n")
        for j, center in enumerate(centers):
            values = [center, p_e[j], *rows[:, j]]
            f.write(",".join(repr(float(v)) for v in values) + "\n")


def cmd_analyze(args: argparse.Namespace) -> int:
    """Side-channel mutual information with bias and both uncertainties."""
    axis = SideChannelAxis(args.axis)
    if len(args.histograms) < 2:
        raise ConfigurationError("at least two state histograms are required")
    if len(args.histograms) > len(LEGAL_CLASSES):
        raise ConfigurationError(f"at most {len(LEGAL_CLASSES)} state histograms are supported")

    if args.protocol:
        probs = ProtocolProbabilities.from_json(args.protocol)
    elif args.from_config:
        probs = protocol_from_config(_load_config(args))
    else:
        probs = ProtocolProbabilities.uniform(len(args.histograms))
    if len(args.histograms) > probs.n_states:
        raise ConfigurationError(
            f"{len(args.histograms)} histograms for {probs.n_states} protocol states"
        )

    profiles = [load_profile_csv(path, i, axis) for i, path in enumerate(args.histograms)]
    rows = [*profiles, *([None] * (probs.n_states - len(profiles)))]
    out = _prepare_out(args.out)

    inputs = {Path(p).name: file_digest(p) for p in args.histograms}
    if args.protocol:
        inputs[Path(args.protocol).name] = file_digest(args.protocol)
    manifest = RunManifest(
        command="analyze",
        config_path=args.config,
        input_digests=inputs,
        parameters={
            "axis": axis.value,
            "mc_samples": args.mc_samples,
            "convention": args.convention,
            "from_config": bool(args.from_config),
        },
        rng_seed=args.seed,
        outputs=[MI_REPORT_FILE, DISTRIBUTION_FILE],
    )
    run_id = manifest.run_id

    report = analyze_side_channel(
        rows,
        probs,
        axis=axis,
        mc_samples=args.mc_samples,
        seed=args.seed,
        convention=BiasConvention(args.convention),
        workers=args.workers,
    )
    report.metadata["run_id"] = run_id
    report.to_json(out / MI_REPORT_FILE)

    e_matrix, _ = profile_matrix(rows, probs)
    p_e = probs.sift_weights() @ e_matrix
    labels = [f"state_{i}" for i in range(len(profiles))]
    _write_distributions(
        out / DISTRIBUTION_FILE,
        profiles[0].bin_centers,
        p_e,
        e_matrix[: len(profiles)],
        labels,
        run_id,
    )
    if report.mc_histogram is not None:
        _write_histogram(out / MI_HISTOGRAM_FILE, *report.mc_histogram, run_id)
        manifest.outputs.append(MI_HISTOGRAM_FILE)
    manifest.write(out / MANIFEST_FILE)
    print(report.summary())
    return EXIT_OK


def cmd_profiles(args: argparse.Namespace) -> int:
    """Write the synthetic per-state profiles, optionally filtered and aligned."""
    overrides = {"apply_filter": False} if args.no_filter else {}
    config = _load_config(args, **overrides)
    out = _prepare_out(args.out)
    profiles = default_profiles(config)

    manifest = RunManifest(
        command="profiles",
        config_path=args.config,
        config=config.model_dump(mode="json"),
        parameters={"align": bool(args.align)},
    )
    run_id = manifest.run_id

    temporal = profiles[SideChannelAxis.TEMPORAL]
    if args.align:
        codes = sorted(temporal)
        result = align_temporal_profiles(
            [temporal[c] for c in codes], step_ps=config.timing_step_ps
        )
        for code, adjustment in zip(codes, result.adjustments, strict=True):
            temporal[code] = adjust_profile(temporal[code], adjustment, config.timing_step_ps)
        write_json(
            out / "timing.json",
            {
                "run_id": run_id,
                "step_ps": config.timing_step_ps,
                "adjustments": {
                    str(code): {"offset_steps": a.offset_steps, "width_steps": a.width_steps}
                    for code, a in zip(codes, result.adjustments, strict=True)
                },
                "l1_history": result.l1_history,
            },
        )
        manifest.outputs.append("timing.json")

    for axis, by_code in profiles.items():
        for code, profile in sorted(by_code.items()):
            if code == VACUUM_CODE:
                continue
            name = f"profile_{axis.value}_{code}.csv"
            write_profile_csv(profile, out / name, run_id)
            manifest.outputs.append(name)
    manifest.write(out / MANIFEST_FILE)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lumenqkd",
        description="Three-state decoy BB84 simulator, post-processing and side-channel analysis.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="Preset name or YAML file")
        p.add_argument("--seed", type=int, help="Random seed")
        p.add_argument("--out", default=".", help="Output directory")

    simulate = sub.add_parser("simulate", help="Simulate a session")
    common(simulate)
    simulate.add_argument("--duration", type=float, required=True, help="Session length in s")
    simulate.add_argument("--axis", choices=[a.value for a in SideChannelAxis], help="Eve's axis")
    simulate.add_argument("--binary", action="store_true", help="Packed binary preparation log")
    simulate.set_defaults(func=cmd_simulate)

    post = sub.add_parser("postprocess", help="Synchronize, sift and estimate QBER")
    common(post)
    post.add_argument("--run-dir", help="Directory written by simulate")
    post.add_argument("--prep", help="Preparation log (.csv or .bin)")
    post.add_argument("--announcements", help="Announcement file")
    post.add_argument("--detections", help="Detection log")
    post.add_argument("--eve", help="Eve log for an empirical mutual-information check")
    post.set_defaults(func=cmd_postprocess)

    analyze = sub.add_parser("analyze", help="Side-channel mutual information")
    common(analyze)
    analyze.add_argument("histograms", nargs="+", help="Per-state histogram CSVs in state order")
    analyze.add_argument("--protocol", help="Protocol-probability JSON")
    analyze.add_argument(
        "--from-config", action="store_true", help="Derive protocol probabilities from --config"
    )
    analyze.add_argument(
        "--axis", choices=[a.value for a in SideChannelAxis], default="temporal"
    )
    analyze.add_argument("--mc-samples", type=int, default=1000, help="Monte-Carlo trials")
    analyze.add_argument("--workers", type=int, help="Monte-Carlo worker processes")
    analyze.add_argument(
        "--convention", choices=[c.value for c in BiasConvention], default="stated"
    )
    analyze.set_defaults(func=cmd_analyze, seed=0)

    profiles = sub.add_parser("profiles", help="Write synthetic per-state profiles")
    common(profiles)
    profiles.add_argument("--align", action="store_true", help="Align the temporal profiles")
    profiles.add_argument("--no-filter", action="store_true", help="Skip the spectral filter")
    profiles.set_defaults(func=cmd_profiles)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except SyncRejectedError as e:
        logger.error("%s", e)
        return EXIT_SYNC_REJECTED
    except (LumenQKDError, ValueError) as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
