"""
Settings access that works with or without a configured Django project.
"""
from typing import Any


def setting(name: str, default: Any) -> Any:
    """Return ``settings.<name>`` when Django is configured, else ``default``."""
    try:
        from django.conf import settings  # type: ignore
        if not settings.configured:
            return default
        return getattr(settings, name, default)
    except Exception:
        return default
