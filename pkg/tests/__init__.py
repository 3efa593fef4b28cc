# Package marker for test modules
"""
Test package for stableforms modules.
"""
