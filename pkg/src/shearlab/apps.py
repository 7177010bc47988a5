"""

============
Shearlab app
============

"""
from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class ShearlabConfig(AppConfig):
    """Shearlab config."""

    name = "shearlab"
    verbose_name = _("Shear flow laboratory")
