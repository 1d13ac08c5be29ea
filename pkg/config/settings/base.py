# ruff: noqa: ERA001, E501
"""Base settings to build other settings files upon."""

import ssl
from pathlib import Path

import environ

from staircase_toolkit import constants

BASE_DIR = Path(__file__).resolve(strict=True).parent.parent.parent
# staircase_toolkit/
APPS_DIR = BASE_DIR / "staircase_toolkit"
env = environ.Env()

READ_DOT_ENV_FILE = env.bool("DJANGO_READ_DOT_ENV_FILE", default=False)
if READ_DOT_ENV_FILE:
    # OS environment variables take precedence over variables from .env
    env.read_env(str(BASE_DIR / ".env"))

# GENERAL
# ------------------------------------------------------------------------------
# https://docs.djangoproject.com/en/dev/ref/settings/#debug
DEBUG = env.bool("DJANGO_DEBUG", False)
# Manifests stamp their start and finish times in UTC.
TIME_ZONE = "UTC"
# https://docs.djangoproject.com/en/dev/ref/settings/#language-code
LANGUAGE_CODE = "en-us"
# https://docs.djangoproject.com/en/dev/ref/settings/#use-i18n
USE_I18N = False
# https://docs.djangoproject.com/en/dev/ref/settings/#use-tz
USE_TZ = True

# DATABASES
# ------------------------------------------------------------------------------
# Scenario runs keep their results on disk; no database is configured.
DATABASES: dict = {}

# APPS
# ------------------------------------------------------------------------------
DJANGO_APPS = [
    "django.contrib.contenttypes",
]
LOCAL_APPS = [
    "staircase_toolkit.scenarios",
]
# https://docs.djangoproject.com/en/dev/ref/settings/#installed-apps
INSTALLED_APPS = DJANGO_APPS + LOCAL_APPS

# STAIRCASE TOOLKIT
# ------------------------------------------------------------------------------
# Numerical defaults; the scenario pipeline hands them to the core explicitly.
# Floats are read as strings: environ's float cast drops exponents.
TOOLKIT_RANK_TOL = float(env("TOOLKIT_RANK_TOL", default=str(constants.RANK_TOL)))
TOOLKIT_P_MAX = env.int("TOOLKIT_P_MAX", default=constants.P_MAX)
TOOLKIT_MODES = env.int("TOOLKIT_MODES", default=constants.MODES)
TOOLKIT_GRID_POINTS = env.int("TOOLKIT_GRID_POINTS", default=constants.GRID_POINTS)
TOOLKIT_CERTIFY_TOL = float(env("TOOLKIT_CERTIFY_TOL", default=str(constants.CERTIFY_TOL)))
TOOLKIT_STEER_TOL = float(env("TOOLKIT_STEER_TOL", default=str(constants.STEER_TOL)))
TOOLKIT_ACCEPT_TOL = float(env("TOOLKIT_ACCEPT_TOL", default=str(constants.ACCEPT_TOL)))
TOOLKIT_GRAMIAN_FLOOR = float(env("TOOLKIT_GRAMIAN_FLOOR", default=str(constants.GRAMIAN_FLOOR)))
TOOLKIT_TAU = float(env("TOOLKIT_TAU", default=str(constants.TAU)))
TOOLKIT_STEPS_PER_TAU = env.int("TOOLKIT_STEPS_PER_TAU", default=constants.STEPS_PER_TAU)
TOOLKIT_CONTROL_MODES = env.int("TOOLKIT_CONTROL_MODES", default=constants.CONTROL_MODES)
TOOLKIT_FEASIBILITY_MAX_ITER = env.int("TOOLKIT_FEASIBILITY_MAX_ITER", default=constants.FEASIBILITY_MAX_ITER)
TOOLKIT_FEASIBILITY_KKT_TOL = float(env("TOOLKIT_FEASIBILITY_KKT_TOL", default=str(constants.FEASIBILITY_KKT_TOL)))
TOOLKIT_LOG_LEVEL = env("TOOLKIT_LOG_LEVEL", default="INFO")

# LOGGING
# ------------------------------------------------------------------------------
# https://docs.djangoproject.com/en/dev/ref/settings/#logging
# See https://docs.djangoproject.com/en/dev/topics/logging for
# more details on how to customize your logging configuration.
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "%(levelname)s %(asctime)s %(module)s %(process)d %(thread)d %(message)s",
        },
    },
    "handlers": {
        "console": {
            "level": "DEBUG",
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "root": {"level": "INFO", "handlers": ["console"]},
    "loggers": {
        # Propagates to the root handler.
        "staircase_toolkit": {"level": TOOLKIT_LOG_LEVEL},
    },
}

REDIS_URL = env("REDIS_URL", default="redis://redis:6379/0")
REDIS_SSL = REDIS_URL.startswith("rediss://")

# Celery
# ------------------------------------------------------------------------------
if USE_TZ:
    # https://docs.celeryq.dev/en/stable/userguide/configuration.html#std:setting-timezone
    CELERY_TIMEZONE = TIME_ZONE
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#std:setting-broker_url
CELERY_BROKER_URL = REDIS_URL
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#redis-backend-use-ssl
CELERY_BROKER_USE_SSL = {"ssl_cert_reqs": ssl.CERT_NONE} if REDIS_SSL else None
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#std:setting-result_backend
CELERY_RESULT_BACKEND = REDIS_URL
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#redis-backend-use-ssl
CELERY_REDIS_BACKEND_USE_SSL = CELERY_BROKER_USE_SSL
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#result-extended
CELERY_RESULT_EXTENDED = True
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#result-backend-always-retry
# https://github.com/celery/celery/pull/6122
CELERY_RESULT_BACKEND_ALWAYS_RETRY = True
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#result-backend-max-retries
CELERY_RESULT_BACKEND_MAX_RETRIES = 10
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#std:setting-accept_content
CELERY_ACCEPT_CONTENT = ["json"]
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#std:setting-task_serializer
CELERY_TASK_SERIALIZER = "json"
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#std:setting-result_serializer
CELERY_RESULT_SERIALIZER = "json"
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#task-time-limit
# A minimal-time scenario with refinement is the longest sub-run.
CELERY_TASK_TIME_LIMIT = env.int("CELERY_TASK_TIME_LIMIT", default=30 * 60)
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#task-soft-time-limit
CELERY_TASK_SOFT_TIME_LIMIT = env.int("CELERY_TASK_SOFT_TIME_LIMIT", default=25 * 60)
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#worker-send-task-events
CELERY_WORKER_SEND_TASK_EVENTS = True
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#std-setting-task_send_sent_event
CELERY_TASK_SEND_SENT_EVENT = True
# https://docs.celeryq.dev/en/stable/userguide/configuration.html#worker-hijack-root-logger
CELERY_WORKER_HIJACK_ROOT_LOGGER = False
