"""Absolutely continuous spectrum on regular trees under disorder."""

from __future__ import annotations

from .const import DOMAIN
from .exceptions import AcstabError

__all__ = ["DOMAIN", "AcstabError"]
