"""Command line front end: sample, render, stats, rir, validate.

Configs are JSON files; shipped presets can be used instead of a config
file.  ``--seed`` overrides the config root seed.  Relative output paths
are resolved under ``$MIXSIM_OUTPUT_ROOT`` when that variable is set.
Every output directory receives the exact resolved config that produced
it.  With ``--json``, errors are reported as a machine-readable JSON
object on stdout.
"""

from __future__ import annotations

import csv
import json
import os
import statistics
import sys
import time
from pathlib import Path

import click

from . import analysis, figures, presets, render
from .corpus import load_manifest, validate_audio_files
from .environment import read_descriptors, write_descriptors
from .pipeline import GeneratorConfig, generate_descriptors, load_config
from .rir import RirGeneratorConfig, RoomInventory, build_inventory
from .sampling import RandomStream, derive_stream_seed


def _resolve_output(path: str) -> Path:
    root = os.environ.get("MIXSIM_OUTPUT_ROOT")
    candidate = Path(path)
    if root and not candidate.is_absolute():
        return Path(root) / candidate
    return candidate


def _fail(message: str, as_json: bool) -> "click.exceptions.Exit":
    if as_json:
        click.echo(json.dumps({"error": message}))
        sys.exit(1)
    raise click.ClickException(message)


@click.group()
def main() -> None:
    """Deterministic multi-speaker mixture and meeting simulation."""


@main.command("sample")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="Generator config JSON.")
@click.option("--preset", "preset_name", type=str,
              help="Shipped preset name (alternative to --config).")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False),
              help="Corpus manifest (overrides config).")
@click.option("--inventory", "inventory_path", type=click.Path(exists=True, file_okay=False),
              help="RIR inventory directory; enables simulated reverb.")
@click.option("--output", "output_path", type=click.Path(), required=True,
              help="Output directory for descriptors.json and config.json.")
@click.option("--seed", type=int, default=None, help="Override the config root seed.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable errors.")
def cmd_sample(config_path, preset_name, manifest_path, inventory_path, output_path,
               seed, as_json) -> None:
    """Sample mixture descriptors (no audio is read)."""
    try:
        if (config_path is None) == (preset_name is None):
            raise ValueError("give exactly one of --config or --preset")
        if config_path is not None:
            config = load_config(config_path)
        else:
            config = presets.generator_preset(preset_name)
        if manifest_path is not None:
            config.manifest = str(manifest_path)
        if inventory_path is not None:
            config.rir_inventory = str(inventory_path)
            if config.environment.reverb == "none":
                from dataclasses import replace

                config.environment = replace(config.environment, reverb="simulated")
        if seed is not None:
            config.root_seed = seed
        if config.manifest is None:
            raise ValueError("no manifest given (config field or --manifest)")

        output_dir = _resolve_output(output_path)
        output_dir.mkdir(parents=True, exist_ok=True)
        config.output = str(output_dir)

        manifest = load_manifest(config.manifest)
        inventory = (
            RoomInventory.load(config.rir_inventory)
            if config.rir_inventory is not None
            else None
        )
        started = time.perf_counter()
        descriptors = generate_descriptors(config, manifest, inventory)
        elapsed = time.perf_counter() - started

        write_descriptors(descriptors, output_dir / "descriptors.json")
        (output_dir / "config.json").write_text(
            json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        click.echo(
            f"wrote {len(descriptors)} descriptors to "
            f"{output_dir / 'descriptors.json'} ({elapsed:.2f} s)"
        )
    except Exception as exc:  # noqa: BLE001  (CLI boundary)
        _fail(str(exc), as_json)


@main.command("render")
@click.option("--descriptors", "descriptors_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--inventory", "inventory_path", type=click.Path(exists=True, file_okay=False))
@click.option("--output", "output_path", type=click.Path(), required=True)
@click.option("--intermediates", is_flag=True,
              help="Also write per-entry source/image files and the noise.")
@click.option("--workers", type=int, default=None,
              help="Worker processes (default: available cores).")
@click.option("--encoding", type=click.Choice(["float32", "pcm16"]), default="float32")
@click.option("--json", "as_json", is_flag=True)
def cmd_render(descriptors_path, manifest_path, inventory_path, output_path,
               intermediates, workers, encoding, as_json) -> None:
    """Render descriptors to mixture WAVs with JSON sidecars."""
    try:
        descriptors = read_descriptors(descriptors_path)
        needs_rirs = any(
            entry.rir is not None for d in descriptors for entry in d.entries
        )
        if needs_rirs and inventory_path is None:
            raise ValueError(
                "descriptors reference RIRs but no --inventory was given"
            )
        output_dir = _resolve_output(output_path)
        output_dir.mkdir(parents=True, exist_ok=True)
        if workers is None:
            workers = os.cpu_count() or 1
        started = time.perf_counter()
        rendered = render.render_dataset(
            descriptors,
            manifest_path,
            output_dir,
            inventory_path=inventory_path,
            workers=workers,
            write_intermediates=intermediates,
            encoding=encoding,
        )
        elapsed = time.perf_counter() - started
        (output_dir / "render_config.json").write_text(
            json.dumps(
                {
                    "descriptors": str(descriptors_path),
                    "manifest": str(manifest_path),
                    "inventory": str(inventory_path) if inventory_path else None,
                    "encoding": encoding,
                    "intermediates": bool(intermediates),
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
        click.echo(f"rendered {len(rendered)} mixtures in {elapsed:.1f} s")
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc), as_json)


def _aggregate(values: list[float]) -> dict[str, float]:
    return {
        "mean": statistics.fmean(values),
        "std": statistics.pstdev(values) if len(values) > 1 else 0.0,
        "min": min(values),
        "max": max(values),
    }


@main.command("stats")
@click.option("--descriptors", "descriptors_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--boundary", type=click.Choice(["recording", "vad"]),
              default="recording", show_default=True)
@click.option("--per-meeting/--aggregate", "per_meeting", default=True,
              help="Include per-meeting rows in the report.")
@click.option("--output", "output_path", type=click.Path(),
              help="Report JSON path (stdout when omitted).")
@click.option("--csv", "csv_path", type=click.Path(),
              help="Per-meeting activity segment CSV.")
@click.option("--figures", "figures_dir", type=click.Path(),
              help="Directory for activity/overlap PNG figures.")
@click.option("--rttm", "rttm_dir", type=click.Path(),
              help="Directory for per-meeting RTTM files.")
@click.option("--json", "as_json", is_flag=True)
def cmd_stats(descriptors_path, manifest_path, boundary, per_meeting, output_path,
              csv_path, figures_dir, rttm_dir, as_json) -> None:
    """Measure overlap, silence, activity and concurrency."""
    try:
        descriptors = read_descriptors(descriptors_path)
        manifest = load_manifest(manifest_path) if manifest_path else None
        all_segments = [
            analysis.activity_from_descriptor(d, manifest, boundary)
            for d in descriptors
        ]
        all_stats = [analysis.meeting_stats(s) for s in all_segments]

        report: dict = {
            "boundary_mode": boundary,
            "num_meetings": len(descriptors),
            "aggregate": {
                "ov_rel": _aggregate([s.ov_rel for s in all_stats]),
                "sil_rel": _aggregate([s.sil_rel for s in all_stats]),
                "max_concurrency": max(s.max_concurrency for s in all_stats),
                "num_utterances_total": sum(
                    s.num_utterances or 0 for s in all_stats
                ),
            },
        }
        if per_meeting:
            report["per_meeting"] = [
                {
                    "mixture_id": d.mixture_id,
                    "ov_rel": s.ov_rel,
                    "sil_rel": s.sil_rel,
                    "single_rel": s.single_rel,
                    "max_concurrency": s.max_concurrency,
                    "num_utterances": s.num_utterances,
                    "speaker_shares": s.speaker_shares,
                }
                for d, s in zip(descriptors, all_stats)
            ]

        text = json.dumps(report, indent=2) + "\n"
        if output_path:
            out = _resolve_output(output_path)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text, encoding="utf-8")
        else:
            click.echo(text, nl=False)

        if csv_path:
            csv_file = _resolve_output(csv_path)
            csv_file.parent.mkdir(parents=True, exist_ok=True)
            with csv_file.open("w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow(
                    ["mixture_id", "speaker_id", "start_seconds", "end_seconds"]
                )
                for d, segments in zip(descriptors, all_segments):
                    for speaker in sorted(segments.segments):
                        for start, end in segments.segments[speaker]:
                            writer.writerow(
                                [
                                    d.mixture_id,
                                    speaker,
                                    f"{start / d.sample_rate:.3f}",
                                    f"{end / d.sample_rate:.3f}",
                                ]
                            )

        if figures_dir:
            fig_dir = _resolve_output(figures_dir)
            fig_dir.mkdir(parents=True, exist_ok=True)
            for d, segments in zip(descriptors, all_segments):
                figures.save_activity_figure(
                    segments, d.sample_rate,
                    fig_dir / f"{d.mixture_id}_activity.png",
                    title=d.mixture_id,
                )
            figures.save_overlap_histogram(
                [s.ov_rel for s in all_stats],
                fig_dir / "overlap_histogram.png",
                label=f"{boundary}-boundary overlap",
            )

        if rttm_dir:
            analysis.write_rttm_files(
                descriptors, manifest, boundary, _resolve_output(rttm_dir)
            )
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc), as_json)


@main.command("rir")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="RIR generator config JSON (default: sms_wsj_rooms preset).")
@click.option("--output", "output_path", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--rooms", type=int, default=None, help="Override room count.")
@click.option("--json", "as_json", is_flag=True)
def cmd_rir(config_path, output_path, seed, rooms, as_json) -> None:
    """Build a room impulse response inventory with the image method."""
    try:
        if config_path is not None:
            config = RirGeneratorConfig.from_dict(
                json.loads(Path(config_path).read_text(encoding="utf-8"))
            )
        else:
            config = presets.rir_preset()
        if rooms is not None:
            from dataclasses import replace

            config = replace(config, num_rooms=rooms)
        stream = RandomStream(derive_stream_seed(seed, "rir-inventory", 0, "rir"))
        started = time.perf_counter()
        inventory = build_inventory(config, stream)
        elapsed = time.perf_counter() - started
        output_dir = _resolve_output(output_path)
        inventory.save(output_dir)
        (output_dir / "config.json").write_text(
            json.dumps({"seed": seed, **config.to_dict()}, indent=2) + "\n",
            encoding="utf-8",
        )
        click.echo(
            f"built {len(inventory.rooms)} rooms "
            f"({inventory.positions_per_room} positions x {inventory.num_mics} mics)"
            f" in {elapsed:.1f} s -> {output_dir}"
        )
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc), as_json)


@main.command("validate")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True)
def cmd_validate(manifest_path, as_json) -> None:
    """Check a manifest and its referenced audio files."""
    try:
        manifest = load_manifest(manifest_path)
        problems = validate_audio_files(manifest)
        if problems:
            if as_json:
                click.echo(json.dumps({"error": "invalid corpus",
                                       "problems": problems}))
                sys.exit(1)
            for problem in problems:
                click.echo(problem, err=True)
            raise click.ClickException(f"{len(problems)} corpus problem(s)")
        click.echo(
            f"manifest OK: {len(manifest.utterances)} utterances, "
            f"{len(manifest.speakers)} speakers at {manifest.sample_rate} Hz"
        )
    except click.ClickException:
        raise
    except Exception as exc:  # noqa: BLE001
        _fail(str(exc), as_json)


if __name__ == "__main__":
    main()
