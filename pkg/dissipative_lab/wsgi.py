"""
WSGI config for the dissipative_lab project.

Serves the admin used to browse experiment runs and result records.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'dissipative_lab.settings')

application = get_wsgi_application()
