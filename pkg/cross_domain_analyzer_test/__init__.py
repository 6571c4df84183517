"""
Test package for the cross-domain anomaly analyzer.
"""
