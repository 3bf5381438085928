"""
Test fixtures and hand-built instances for Cell-Free Uplink Simulator tests
"""
