"""Human-readable and JSON summaries of a run manifest."""

import logging
from enum import StrEnum
from pathlib import Path

from rest_framework.renderers import JSONRenderer

from shearlab.models import RunManifest
from shearlab.serializers import RunManifestSerializer

logger = logging.getLogger(__name__)


class ReportFormat(StrEnum):
    JSON = "json"
    TEXT_TABLE = "text_table"


COLUMNS = ("experiment", "check", "status", "value", "threshold", "source")


def _number(value) -> str:
    return "-" if value is None else f"{value:.4g}"


def text_table(manifest: RunManifest) -> str:
    """One row per check, under a header naming the version and run time."""
    rows = [
        (
            str(experiment.kind),
            check.name,
            str(check.status),
            _number(check.value),
            _number(check.threshold),
            check.source,
        )
        for experiment in manifest.experiments
        for check in experiment.checks
    ]
    widths = [max(len(row[i]) for row in [COLUMNS, *rows]) for i in range(len(COLUMNS))]
    lines = [
        f"shearlab {manifest.version}, started {manifest.started}, "
        f"{manifest.wall_clock:.1f} s",
        "  ".join(name.ljust(width) for name, width in zip(COLUMNS, widths)).rstrip(),
    ]
    lines += [
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in rows
    ]
    return "\n".join(lines) + "\n"


def emit_report(manifest: RunManifest, format: ReportFormat | str, directory) -> Path:
    """Write ``report.json`` or ``report.txt`` next to the manifest."""
    format = ReportFormat(format)
    directory = Path(directory)
    if format == ReportFormat.JSON:
        path = directory / "report.json"
        data = RunManifestSerializer(manifest).data
        path.write_bytes(JSONRenderer().render(data, renderer_context={"indent": 2}))
    else:
        path = directory / "report.txt"
        path.write_text(text_table(manifest))
    logger.info("Report written to %s.", path)
    return path
