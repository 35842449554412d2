"""
Exception hierarchy shared by every layer

CLI exit codes are derived from these types (see eieseg.cli.app)
"""
from typing import Optional, Union
from pathlib import Path


class EieSegError(Exception):
    """Base class for all eieseg errors"""


class DimensionError(EieSegError, ValueError):
    """Grid sizes or class counts do not agree"""


class FormatError(EieSegError, ValueError):
    """A tensor, mask or CSV file could not be parsed"""

    def __init__(
        self,
        message: str,
        offset: Optional[int] = None,
        path: Optional[Union[str, Path]] = None
    ):
        self.offset = offset
        self.path = str(path) if path is not None else None
        where = []
        if self.path:
            where.append(self.path)
        if offset is not None:
            where.append(f"byte {offset}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class DivergenceError(EieSegError, ArithmeticError):
    """A loss or energy became non-finite"""

    def __init__(
        self,
        message: str,
        epoch: Optional[int] = None,
        step: Optional[int] = None,
        arm: Optional[str] = None
    ):
        self.epoch = epoch
        self.step = step
        self.arm = arm
        parts = []
        if arm:
            parts.append(f"arm={arm}")
        if epoch is not None:
            parts.append(f"epoch={epoch}")
        if step is not None:
            parts.append(f"step={step}")
        suffix = f" [{', '.join(parts)}]" if parts else ""
        super().__init__(f"{message}{suffix}")
