"""Content-addressed on-disk cache with atomic, checksummed writes.

Entries are immutable: a key is written once (write temp, fsync, rename)
and a corrupted or mismatching file is treated as a miss.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Optional

from gmpy2 import mpfr


def default_cache_dir() -> Path:
    env = os.environ.get("KAM_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "kamscale"


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Cache:
    def __init__(self, root: Optional[os.PathLike] = None, enabled: bool = True):
        self.root = Path(root) if root is not None else default_cache_dir()
        self.enabled = enabled
        self._mem: dict = {}

    def _path(self, kind: str, key: tuple) -> Path:
        return self.root / kind / (_digest(repr(key)) + ".json")

    def get(self, kind: str, key: tuple) -> Any:
        if not self.enabled:
            return None
        mk = (kind, key)
        if mk in self._mem:
            return self._mem[mk]
        path = self._path(kind, key)
        try:
            blob = json.loads(path.read_text())
        except (OSError, ValueError):
            return None
        body = json.dumps(blob.get("payload"), sort_keys=True)
        if blob.get("key") != repr(key) or blob.get("checksum") != _digest(body):
            return None
        self._mem[mk] = blob["payload"]
        return blob["payload"]

    def put(self, kind: str, key: tuple, payload: Any) -> None:
        if not self.enabled:
            return
        self._mem[(kind, key)] = payload
        path = self._path(kind, key)
        if path.exists() and self.get(kind, key) is not None:
            return
        body = json.dumps(payload, sort_keys=True)
        atomic_write(path, json.dumps({"key": repr(key), "payload": payload, "checksum": _digest(body)},
                                      sort_keys=True))


class ResultStore:
    """Residues keyed by (p, q, eps, digits) plus the orbits behind them."""

    def __init__(self, cache: Optional[Cache] = None, keep_orbits: bool = True):
        self.cache = cache
        self.keep_orbits = keep_orbits
        self._index: dict = {}  # (p, q, eps) -> digits of the trusted residue

    def get_residue(self, p: int, q: int, eps: str):
        from .orbits import Residue

        if self.cache is None:
            return None
        hit = self.cache.get("residue_index", (p, q, eps))
        if hit is None:
            return None
        digits = hit["digits"]
        pay = self.cache.get("residue", (p, q, eps, digits))
        if pay is None:
            return None
        from .numerics import PrecisionContext

        ctx = PrecisionContext(digits)
        with ctx.local():
            return Residue(mpfr(pay["value"]), mpfr(pay["trace"]), pay["cancellation_digits"], digits,
                           p, q, eps)

    def put_residue(self, r) -> None:
        if self.cache is None:
            return
        from .numerics import fmt

        nd = r.digits + 5
        self.cache.put("residue", (r.p, r.q, r.epsilon, r.digits),
                       {"value": fmt(r.value, nd), "trace": fmt(r.trace, nd),
                        "cancellation_digits": r.cancellation_digits})
        self.cache.put("residue_index", (r.p, r.q, r.epsilon), {"digits": r.digits})
        if self.keep_orbits and r.orbit is not None:
            from .orbits import orbit_to_text

            self.cache.put("orbit", (r.p, r.q, r.epsilon, r.digits), {"text": orbit_to_text(r.orbit)})

    def get_orbit(self, p: int, q: int, eps: str, digits: int):
        from .orbits import orbit_from_text

        if self.cache is None:
            return None
        pay = self.cache.get("orbit", (p, q, eps, digits))
        return orbit_from_text(pay["text"]) if pay else None
