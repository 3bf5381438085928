"""
Cell-Free Uplink Simulator Configuration
Scenario defaults, model constants and preset locations
"""

__version__ = "1.0.0"
