from shearlab.management.base import ExperimentCommand
from shearlab.models import ExperimentKind


class Command(ExperimentCommand):
    help = "Certify semigroup decay from resolvent bounds."
    kind = ExperimentKind.DSR_CHECK
