"""Traveling solitary waves of the fractional cubic NLS."""
