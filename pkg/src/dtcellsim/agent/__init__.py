"""Shared-parameter recurrent actor-critic with top-N SINR action masking."""
