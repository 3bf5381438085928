"""
Cell-Free Uplink Simulator
Monte Carlo evaluation of user-centric cell-free uplink receivers
"""

__version__ = "1.0.0"
