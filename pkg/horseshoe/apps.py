from django.apps import AppConfig


class HorseshoeConfig(AppConfig):
    name = 'horseshoe'
    verbose_name = 'Wrapped horseshoe toolkit'
