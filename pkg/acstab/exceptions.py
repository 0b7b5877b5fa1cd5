"""Errors raised by acstab."""

from __future__ import annotations

from functools import cache
import json
from pathlib import Path
from typing import Any

from .const import DOMAIN, ExitCode


@cache
def _messages() -> dict[str, Any]:
    """Load the exception messages from strings.json."""
    with open(Path(__file__).parent / "strings.json", encoding="utf-8") as file:
        return json.load(file)["exceptions"]


class AcstabError(Exception):
    """Base class for all acstab errors."""

    exit_code: ExitCode = ExitCode.NUMERIC_ERROR

    def __init__(
        self,
        translation_key: str,
        translation_placeholders: dict[str, Any] | None = None,
    ) -> None:
        """Initialize the error from a translation key."""
        self.translation_domain = DOMAIN
        self.translation_key = translation_key
        self.translation_placeholders = translation_placeholders or {}
        template = _messages().get(translation_key, {}).get("message", translation_key)
        try:
            message = template.format(**self.translation_placeholders)
        except (KeyError, IndexError):
            message = template
        super().__init__(message)


class ConfigError(AcstabError):
    """Invalid configuration or arguments."""

    exit_code = ExitCode.CONFIG_ERROR


class InvalidTopology(ConfigError):
    """Tree topology outside the supported range."""

    def __init__(self, detail: str) -> None:
        """Initialize with a detail message."""
        super().__init__("invalid_topology", {"detail": detail})


class InvalidPotential(ConfigError):
    """Background potential that cannot be evaluated."""

    def __init__(self, detail: str) -> None:
        """Initialize with a detail message."""
        super().__init__("invalid_potential", {"detail": detail})


class InvalidDisorder(ConfigError):
    """Disorder description outside the supported families."""

    def __init__(self, detail: str) -> None:
        """Initialize with a detail message."""
        super().__init__("invalid_disorder", {"detail": detail})


class DomainError(ConfigError):
    """Estimator input outside its mathematical domain."""

    def __init__(self, quantity: str, detail: str) -> None:
        """Initialize with the offending quantity."""
        super().__init__("domain_error", {"quantity": quantity, "detail": detail})


class UnsupportedPotential(ConfigError):
    """Operation called with a potential it cannot handle."""

    def __init__(self, operation: str, kind: str) -> None:
        """Initialize with the operation name and potential kind."""
        super().__init__(
            "unsupported_potential", {"operation": operation, "kind": kind}
        )


class PoolTooSmall(ConfigError):
    """Population pool below the minimum size."""

    def __init__(self, size: int, minimum: int) -> None:
        """Initialize with the offending size."""
        super().__init__("pool_too_small", {"size": size, "minimum": minimum})


class NumericError(AcstabError):
    """Numerical failure."""

    exit_code = ExitCode.NUMERIC_ERROR


class SingularPointError(NumericError):
    """Recursion hit an exactly vanishing denominator."""

    def __init__(self, z: complex) -> None:
        """Initialize with the spectral parameter."""
        super().__init__("singular_point", {"z": z})


class SingularJunctionError(NumericError):
    """Wire matching equations are degenerate."""

    def __init__(self, k: float, gamma: complex) -> None:
        """Initialize with the wire momentum and root value."""
        super().__init__("singular_junction", {"k": k, "gamma": gamma})


class CheckFailed(AcstabError):
    """One or more verification checks failed."""

    exit_code = ExitCode.CHECK_FAILURE

    def __init__(self, checks: list[str]) -> None:
        """Initialize with the failing check names."""
        super().__init__(
            "check_failed", {"count": len(checks), "checks": ", ".join(checks)}
        )
