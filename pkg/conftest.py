import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ibsrisk.settings')
django.setup()
