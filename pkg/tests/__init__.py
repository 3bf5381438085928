"""
Cell-Free Uplink Simulator Test Suite
"""
