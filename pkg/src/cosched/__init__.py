"""Centralized coordinated scheduling with base-station muting."""
