"""
irqracer: race detection, validation and repair for interrupt-driven IDL programs
"""

__version__ = "0.1.0"
