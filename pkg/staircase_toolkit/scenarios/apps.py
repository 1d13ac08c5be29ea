from django.apps import AppConfig


class ScenariosConfig(AppConfig):
    name = "staircase_toolkit.scenarios"
    verbose_name = "Scenarios"
