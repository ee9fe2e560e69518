"""Exact computations with formal plethories on truncation towers."""
