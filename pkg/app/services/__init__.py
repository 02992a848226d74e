"""
Services package for the bandit experiment runner
Contains configuration resolution and result emission
"""

from .config_service import ConfigService
from .results_service import ResultsService

__all__ = ['ConfigService', 'ResultsService']
