"""
Project package for the inverse binomial sampling risk toolkit.
"""

__version__ = '0.4.0'

__all__ = ('__version__',)
