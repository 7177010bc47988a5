from shearlab.management.base import ExperimentCommand
from shearlab.models import ExperimentKind


class Command(ExperimentCommand):
    help = "Scan the limiting-absorption constant."
    kind = ExperimentKind.LAP_SCAN
