"""
URL configuration for dissipative_lab.

Only the admin is routed; experiments are driven from management commands.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path('admin/', admin.site.urls),
]
