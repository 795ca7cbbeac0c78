"""
Console entry point ``horseshoe``.

Outside a Django project the command runs with a minimal settings module
that only installs this app. ``horseshoe key=value ...`` is the same as
``django-admin horseshoe key=value ...`` in a project.
"""

import sys

from django.conf import settings


MINIMAL_SETTINGS = dict(
    INSTALLED_APPS=['horseshoe'],
    LOGGING_CONFIG='logging.config.dictConfig',
    LOGGING={
        'version': 1,
        'disable_existing_loggers': False,
        'handlers': {'console': {'class': 'logging.StreamHandler'}},
        'loggers': {'horseshoe': {'handlers': ['console'], 'level': 'WARNING'}},
    },
)


def main(argv=None):
    from django.core.management import execute_from_command_line

    if not settings.configured:
        settings.configure(**MINIMAL_SETTINGS)
    argv = sys.argv[1:] if argv is None else list(argv)
    execute_from_command_line(['horseshoe', 'horseshoe'] + argv)


if __name__ == '__main__':
    main()
