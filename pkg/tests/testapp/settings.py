"""
Django settings for the horseshoe test project.

The toolkit needs no database, models or middleware: the project only
installs the app and routes the ``horseshoe`` logger to the console.
"""

import os

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

SECRET_KEY = 'horseshoe-tests-only'

DEBUG = True

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'testapp',
    'horseshoe',
]

DATABASES = {}

USE_TZ = True


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
        },
    },
    'loggers': {
        'horseshoe': {
            'handlers': ['console'],
            'level': 'WARNING',
        },
    },
}


# Toolkit settings, reduced so the suite runs in minutes

HORSESHOE_GRID_RESOLUTION = 200
HORSESHOE_ATTRACTOR_SEEDS = 400
HORSESHOE_BURN_IN = 200
HORSESHOE_KEEP = 10
HORSESHOE_CERTIFY_THETA_SAMPLES = 200
HORSESHOE_CERTIFY_Z_SAMPLES = 21
HORSESHOE_CERTIFY_FOLD_SAMPLES = 420
HORSESHOE_THREADS = 1
