"""
CSV and JSON output of a run.

Files are staged in memory by an :class:`ArtifactSet` and written on
:meth:`~ArtifactSet.commit`, each to a temporary file in the target
directory that is renamed into place. A run that fails before the commit
leaves no output at all.

Every CSV file starts with the comment line::

    # django-horseshoe <version> config=<sha256 of the effective configuration>

JSON files carry the same data in their ``"_meta"`` field.
"""

import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .__version__ import __version__


logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = 'HORSESHOE_OUTPUT_DIR'


def config_digest(text):
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def header_line(digest):
    return '# django-horseshoe {} config={}'.format(__version__, digest)


def output_dir(configured=None):
    """
    The output directory: ``$HORSESHOE_OUTPUT_DIR`` if set, else
    *configured*, else the working directory.
    """
    return Path(os.environ.get(OUTPUT_DIR_ENV) or configured or '.')


def _plain(value):
    """
    JSON fallback for numpy scalars, arrays and complex numbers.
    """
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError('{!r} is not JSON serializable'.format(value))


def _finite(value):
    # JSON has no inf or nan
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return value


def csv_text(fields, rows, digest):
    buffer = io.StringIO()
    buffer.write(header_line(digest) + '\n')
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(fields)
    for row in rows:
        if isinstance(row, dict):
            row = [row[f] for f in fields]
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def json_text(data, digest):
    data = dict(_finite(_plain_tree(data)))
    data['_meta'] = dict(tool='django-horseshoe', version=__version__, config=digest)
    return json.dumps(data, sort_keys=True, indent=2, default=_plain) + '\n'


def _plain_tree(value):
    if isinstance(value, dict):
        return {str(k): _plain_tree(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain_tree(v) for v in value]
    if isinstance(value, (np.generic, np.ndarray, complex)):
        return _plain_tree(_plain(value))
    return value


def write_atomic(path, text):
    """
    Write *text* to *path* through a temporary file in the same directory.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix='.{}.'.format(path.name), dir=str(path.parent))
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as file:
            file.write(text)
        os.replace(tmp, str(path))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ArtifactSet:
    """
    The output files of one run.

    :param directory: target directory
    :param str stem: common file name prefix
    :param str config_text: effective configuration, echoed as
        ``<stem>.config.txt``
    :param str digest: configuration hash for the headers
    """

    def __init__(self, directory, stem, config_text, digest):
        self.directory = Path(directory)
        self.stem = stem
        self.digest = digest
        self._files = dict()
        self._files[self.path('config.txt')] = header_line(digest) + '\n' + config_text

    def __iter__(self):
        return iter(self._files)

    def __len__(self):
        return len(self._files)

    def path(self, suffix):
        return self.directory / '{}.{}'.format(self.stem, suffix)

    def add_csv(self, suffix, fields, rows):
        path = self.path(suffix + '.csv')
        self._files[path] = csv_text(fields, rows, self.digest)
        return path

    def add_json(self, suffix, data):
        path = self.path(suffix + '.json')
        self._files[path] = json_text(data, self.digest)
        return path

    def commit(self):
        """
        Write all staged files.

        :return: list of written paths
        """
        for path, text in self._files.items():
            write_atomic(path, text)
            logger.debug('wrote %s', path)
        return list(self._files)
