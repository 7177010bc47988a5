from shearlab.management.base import ExperimentCommand
from shearlab.models import ExperimentKind


class Command(ExperimentCommand):
    help = "Measure the envelope constants of the Airy kernels."
    kind = ExperimentKind.KERNEL_VERIFY
