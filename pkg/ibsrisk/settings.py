"""
Django settings for the ibsrisk project.

The project has no web surface; Django provides the command framework,
the cache layer used for asymptotic-risk memoisation, logging configuration
and the test runner.

Every RISK_* numeric default can be overridden by an environment variable
of the same name.
"""

import os
from pathlib import Path

from . import __version__

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    try:
        return float(value) if value is not None else default
    except ValueError:
        return default


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    try:
        return int(float(value)) if value is not None else default
    except ValueError:
        return default


def _env_bool(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'ibsrisk-local-only-not-used-for-signing')

DEBUG = _env_bool('DJANGO_DEBUG', False)

ALLOWED_HOSTS: list = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'risk',
]

# Database is never touched by the computations; the runner still expects one.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

TIME_ZONE = 'UTC'

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Caches - the 'risk' alias memoises asymptotic-risk integrals within a process
CACHES = {
    'default': {
        'BACKEND': 'django.core.cache.backends.locmem.LocMemCache',
    },
    'risk': {
        'BACKEND': 'django.core.cache.backends.locmem.LocMemCache',
        'LOCATION': 'ibsrisk-eta',
        'TIMEOUT': None,
        'OPTIONS': {
            'MAX_ENTRIES': 200000,
        },
    },
}


# Numerical tolerances and limits
RISK_TOOL_VERSION = __version__

RISK_QUAD_EPSABS = _env_float('RISK_QUAD_EPSABS', 1e-13)
RISK_QUAD_EPSREL = _env_float('RISK_QUAD_EPSREL', 1e-11)
RISK_QUAD_LIMIT = _env_int('RISK_QUAD_LIMIT', 200)
RISK_TAIL_CUTOFF = _env_float('RISK_TAIL_CUTOFF', 1e-14)
RISK_ETA_CACHE_ENABLED = _env_bool('RISK_ETA_CACHE_ENABLED', True)

RISK_SERIES_TOL = _env_float('RISK_SERIES_TOL', 1e-10)
RISK_SERIES_MAX_TERMS = _env_int('RISK_SERIES_MAX_TERMS', 10 ** 8)
RISK_SERIES_CHUNK = _env_int('RISK_SERIES_CHUNK', 65536)

RISK_SIM_BATCH = _env_int('RISK_SIM_BATCH', 50000)
RISK_SIM_WORKERS = _env_int('RISK_SIM_WORKERS', 4)

RISK_OPTIMIZER_OMEGA_RTOL = _env_float('RISK_OPTIMIZER_OMEGA_RTOL', 1e-9)
RISK_OPTIMIZER_RESIDUAL_RTOL = _env_float('RISK_OPTIMIZER_RESIDUAL_RTOL', 1e-9)


# Logging
RISK_LOG_LEVEL = os.getenv('RISK_LOG_LEVEL', 'WARNING').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'risk': {
            'handlers': ['console'],
            'level': RISK_LOG_LEVEL,
            'propagate': False,
        },
    },
}
