from django.apps import AppConfig


class MitigationConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'mitigation'
    verbose_name = 'Error mitigation'
