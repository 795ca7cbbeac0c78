"""
Pytest wiring for the Django test project, mirroring ``tests/manage.py``.
"""
import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, HERE)
sys.path.insert(1, os.path.dirname(HERE))

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'testapp.settings')

import django  # noqa: E402

django.setup()
