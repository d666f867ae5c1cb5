from django.apps import AppConfig


class XyzModelConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'xyz_model'
    verbose_name = 'Dissipative XYZ model'
