"""Shared implementation of the experiment commands."""

import logging

from django.core.management.base import BaseCommand, CommandError
from django.utils.translation import gettext_lazy as _

from shearlab.exceptions import (
    AliasingWarning,
    BoundaryLeakage,
    ConfigInvalid,
    ResidualWarning,
    ShearlabError,
)
from shearlab.experiments import load_config, run_experiment
from shearlab.models import ExperimentKind
from shearlab.reports import ReportFormat, emit_report

logger = logging.getLogger(__name__)

#: Exit code of a run in which a check failed.
CHECK_FAILED = 1

#: Exit code of an invalid configuration or a numerical failure.
RUN_FAILED = 2


class ExperimentCommand(BaseCommand):
    """Run one experiment kind from a configuration file.

    Exits with 0 when every check passes, 1 when a check fails and 2 on an
    invalid configuration or a runtime error.
    """

    kind: ExperimentKind

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help=_("Experiment configuration (JSON)."))
        parser.add_argument("--out", required=True, help=_("Output directory."))
        parser.add_argument(
            "--format",
            choices=[format.value for format in ReportFormat],
            default=ReportFormat.TEXT_TABLE.value,
            help=_("Report format."),
        )

    def handle(self, *args, **options):
        try:
            config = load_config(options["config"], self.kind)
            manifest = run_experiment(config, options["out"])
            report = emit_report(manifest, options["format"], options["out"])
        except ConfigInvalid as error:
            raise CommandError(
                _("Invalid configuration: {0}").format(error.detail), returncode=RUN_FAILED
            ) from error
        except (
            ShearlabError, BoundaryLeakage, AliasingWarning, ResidualWarning, OSError
        ) as error:
            logger.error("The %s experiment failed: %s", self.kind, error)
            raise CommandError(str(error), returncode=RUN_FAILED) from error

        failed = [check for check in manifest.checks if check.failed]
        if failed:
            raise CommandError(
                _("{0} of {1} checks failed, see {2}.").format(
                    len(failed), len(manifest.checks), report
                ),
                returncode=CHECK_FAILED,
            )
        self.stdout.write(
            self.style.SUCCESS(
                _("All {0} checks passed, see {1}.").format(len(manifest.checks), report)
            )
        )
