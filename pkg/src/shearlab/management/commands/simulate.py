from shearlab.management.base import ExperimentCommand
from shearlab.models import ExperimentKind


class Command(ExperimentCommand):
    help = "Evolve modes along both paths and compare them."
    kind = ExperimentKind.SIMULATE
