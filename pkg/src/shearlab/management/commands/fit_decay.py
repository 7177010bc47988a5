from shearlab.management.base import ExperimentCommand
from shearlab.models import ExperimentKind


class Command(ExperimentCommand):
    help = "Fit decay rates over a viscosity sweep."
    kind = ExperimentKind.FIT_DECAY
