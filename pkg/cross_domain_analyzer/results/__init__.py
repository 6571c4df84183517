"""
Module to initialize results processors.
"""
