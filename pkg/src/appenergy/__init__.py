"""Energy measurement and analysis toolkit for mobile app test campaigns."""

__version__ = "0.1.0"

from .errors import AppEnergyError

__all__ = ["AppEnergyError", "__version__"]
