import logging

from django.core.management.base import BaseCommand
from django.core.management.base import CommandError

from horseshoe.exceptions import HorseshoeError
from horseshoe.runconfig import COMMANDS
from horseshoe.runconfig import parse_config
from horseshoe.runner import execute


LOG_LEVELS = {
    0: logging.ERROR,
    1: logging.WARNING,
    2: logging.INFO,
    3: logging.DEBUG,
}


class Command(BaseCommand):
    help = (
        'Run one analysis of the wrapped horseshoe map or of a forced saddle '
        'system. Commands: {}.'.format(', '.join(COMMANDS))
    )

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        # key=value options may come before, between and after the flags
        parser.parse_args = parser.parse_intermixed_args
        return parser

    def add_arguments(self, parser):
        parser.add_argument(
            'options', nargs='*', metavar='key=value',
            help='Configuration values, overriding those of --config.',
        )
        parser.add_argument('--config', help='Flat key = value configuration file.')
        parser.add_argument('--output', help='Output directory.')
        parser.add_argument('--threads', type=int, help='Worker processes.')

    def handle(self, *args, **options):
        logging.getLogger('horseshoe').setLevel(LOG_LEVELS.get(options['verbosity'], logging.DEBUG))

        overrides = list(options['options'] or ())
        for key in ('output', 'threads'):
            if options[key] is not None:
                overrides.append('{}={}'.format(key, options[key]))

        text = ''
        if options['config']:
            try:
                with open(options['config'], encoding='utf-8') as file:
                    text = file.read()
            except OSError as exc:
                raise CommandError('cannot read {}: {}'.format(options['config'], exc), returncode=2)

        try:
            config = parse_config(text, overrides)
            result = execute(config)
        except HorseshoeError as exc:
            raise CommandError('{}: {}'.format(type(exc).__name__, exc), returncode=exc.exit_code)

        self.stdout.write(result.summary)
        if options['verbosity'] > 1:
            for path in result.paths:
                self.stderr.write('wrote {}'.format(path))
