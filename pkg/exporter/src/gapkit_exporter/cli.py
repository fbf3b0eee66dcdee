"""gapkit-export: embed an image folder or prompt list into EMB1/LBL1 files."""

from __future__ import annotations

import json
import sys

import click

from .export import ExportManifest, ExporterError, export_embeddings


@click.command()
@click.option("--manifest", "manifest_path", required=True, type=str,
              help="JSON manifest; paths inside resolve relative to it.")
def run(manifest_path):
    """Run the export described by a manifest and print a JSON summary."""
    summary = export_embeddings(ExportManifest.from_json(manifest_path))
    click.echo(json.dumps(summary))


def main():
    try:
        run.main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(int(exc.exit_code))
    except click.ClickException as exc:
        print(f"gapkit-export: error: {exc.format_message()}", file=sys.stderr)
        sys.exit(2)
    except ExporterError as exc:
        print(f"gapkit-export: error: {exc}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
