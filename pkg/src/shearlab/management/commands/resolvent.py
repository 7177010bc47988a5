from shearlab.management.base import ExperimentCommand
from shearlab.models import ExperimentKind


class Command(ExperimentCommand):
    help = "Scan the coupled resolvent and check its oracles and limits."
    kind = ExperimentKind.RESOLVENT
