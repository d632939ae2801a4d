import hashlib
import logging
import threading
from typing import Any, Optional

from .conf import setting

logger = logging.getLogger(__name__)

CACHE_ALIAS = 'risk'


class _InProcessStore:
    def __init__(self) -> None:
        self._data: dict[str, Any] = {}
        self._lock = threading.Lock()

    def get(self, key: str) -> Any:
        with self._lock:
            return self._data.get(key)

    def set(self, key: str, value: Any) -> None:
        with self._lock:
            self._data[key] = value

    def clear(self) -> None:
        with self._lock:
            self._data.clear()


class EtaCache:
    """Memoises asymptotic-risk integrals within one process.

    Priority order:
    1) Django cache alias 'risk' (when Django is configured)
    2) In-process dictionary
    """

    def __init__(self) -> None:
        self._backend = None
        self._backend_type: str = 'memory'  # 'django' | 'memory'
        self._init_backend()

    def _init_backend(self) -> None:
        if self._try_init_django_backend():
            return
        self._backend = _InProcessStore()
        self._backend_type = 'memory'

    def _try_init_django_backend(self) -> bool:
        try:
            from django.conf import settings  # type: ignore
            if not settings.configured or CACHE_ALIAS not in getattr(settings, 'CACHES', {}):
                return False
            from django.core.cache import caches  # type: ignore
            self._backend = caches[CACHE_ALIAS]
            self._backend_type = 'django'
            return True
        except Exception:
            return False

    @property
    def backend_type(self) -> str:
        return self._backend_type

    @property
    def enabled(self) -> bool:
        return bool(setting('RISK_ETA_CACHE_ENABLED', True))

    @staticmethod
    def make_key(*parts: Any) -> str:
        digest = hashlib.sha1('|'.join(repr(p) for p in parts).encode('utf-8')).hexdigest()
        return f"eta:{digest}"

    def get(self, key: str) -> Optional[Any]:
        if not self.enabled:
            return None
        try:
            return self._backend.get(key)
        except Exception:
            logger.debug(f"[Cache] get failed on {self._backend_type} backend", exc_info=True)
            return None

    def set(self, key: str, value: Any) -> None:
        if not self.enabled:
            return
        try:
            self._backend.set(key, value)
        except Exception:
            logger.debug(f"[Cache] set failed on {self._backend_type} backend", exc_info=True)

    def clear(self) -> None:
        try:
            self._backend.clear()
        except Exception:
            pass


_CACHE: Optional[EtaCache] = None
_CACHE_LOCK = threading.Lock()


def get_eta_cache() -> EtaCache:
    global _CACHE
    with _CACHE_LOCK:
        if _CACHE is None:
            _CACHE = EtaCache()
        return _CACHE
