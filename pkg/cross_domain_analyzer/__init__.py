"""
Cross-domain weakly-supervised video anomaly analyzer.
"""
