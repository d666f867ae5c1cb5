"""
Django settings for the dissipative_lab project.

The project hosts the dissipative XYZ simulator apps and the experiment
harness. Only the admin is served over HTTP; everything else runs through
management commands.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

from pathlib import Path
from decouple import config, Csv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-dissipative-lab-local-only')

DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1', cast=Csv())


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',

    # Local apps
    'hilbert',
    'xyz_model',
    'noise',
    'evolution',
    'spectral',
    'meanfield',
    'mitigation',
    'experiments',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'dissipative_lab.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'dissipative_lab.wsgi.application'


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('DATABASE_PATH', default=str(BASE_DIR / 'db.sqlite3')),
    }
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


STATIC_URL = '/static/'

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Simulation defaults (units of the single-site decay rate gamma)
SIMULATION_DEFAULTS = {
    'TAU': config('SIM_TAU', default=0.01, cast=float),
    'MAX_TIME': config('SIM_MAX_TIME', default=50.0, cast=float),
    'STEADY_TOLERANCE': config('SIM_STEADY_TOLERANCE', default=1e-7, cast=float),
    'PROBE_WINDOW': config('SIM_PROBE_WINDOW', default=1.0, cast=float),
    'RECORD_STRIDE': config('SIM_RECORD_STRIDE', default=10, cast=int),
    'JX': config('SIM_JX', default=0.9, cast=float),
    'JZ': config('SIM_JZ', default=1.0, cast=float),
    'GAMMA': 1.0,
    'BOUNDARY': config('SIM_BOUNDARY', default='open'),
    'COORDINATION': config('SIM_COORDINATION', default=4, cast=int),
    'PENCIL_SV_THRESHOLD': config('SIM_PENCIL_SV_THRESHOLD', default=1e-8, cast=float),
    'SCALING_WINDOW': tuple(config('SIM_SCALING_WINDOW', default='0.005,0.05', cast=Csv(float))),
    'BOOST_FACTORS': tuple(config('SIM_BOOST_FACTORS', default='1,1.5,2', cast=Csv(float))),
}

# Default directory for experiment outputs (--out overrides it)
EXPERIMENT_OUTPUT_DIR = Path(config('EXPERIMENT_OUTPUT_DIR', default=str(BASE_DIR / 'results')))

# Worker processes used by sweeps when --workers is not given
EXPERIMENT_WORKERS = config('EXPERIMENT_WORKERS', default=1, cast=int)

# Stamped on every run for provenance
SIMULATOR_VERSION = '1.0.0'

SIM_LOG_LEVEL = config('SIM_LOG_LEVEL', default='INFO')

# Logging Configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'INFO',
        },
        **{
            app: {
                'handlers': ['console'],
                'level': SIM_LOG_LEVEL,
                'propagate': False,
            }
            for app in (
                'hilbert', 'xyz_model', 'noise', 'evolution',
                'spectral', 'meanfield', 'mitigation', 'experiments',
            )
        },
    },
}
