from shearlab.management.base import ExperimentCommand
from shearlab.models import ExperimentKind


class Command(ExperimentCommand):
    help = "Compare the Theta formulations and measure its Gevrey bound."
    kind = ExperimentKind.THETA_BOUNDS
