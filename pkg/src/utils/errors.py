"""
Error types for the mammographic mass toolkit
Every error derives from ValueError or RuntimeError so callers catching those keep working
"""

from typing import Optional


class MammoError(Exception):
    """Base class for all toolkit errors"""


class DataParseError(MammoError, ValueError):
    """A line of the input file could not be parsed"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class SchemaError(MammoError, ValueError):
    """A schema definition or a record violates the declared schema"""


class MissingValueError(MammoError, ValueError):
    """A MISSING cell reached a stage that requires complete data"""

    def __init__(self, record_index: int, attribute: str):
        self.record_index = record_index
        self.attribute = attribute
        super().__init__(
            f"record {record_index}: attribute '{attribute}' is MISSING (run imputation first)"
        )


class ConfigError(MammoError, ValueError):
    """Invalid experiment or model configuration"""


class DegenerateTableError(MammoError, ValueError):
    """Contingency table has fewer than two non-empty rows or columns"""


class DegenerateLabelsError(MammoError, ValueError):
    """Training data contains a single class"""


class ModelFormatError(MammoError, ValueError):
    """Serialized model is unreadable or does not match the data"""


class TrainingError(MammoError, RuntimeError):
    """Numerical failure during model training"""

    def __init__(self, message: str, epoch: Optional[int] = None):
        self.epoch = epoch
        prefix = f"epoch {epoch}: " if epoch is not None else ""
        super().__init__(f"{prefix}{message}")


class StageError(MammoError, ValueError):
    """A pipeline stage failed before any model was trained"""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage '{stage}': {message}")
