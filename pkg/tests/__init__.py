"""
fluxtrade Test Suite
"""
