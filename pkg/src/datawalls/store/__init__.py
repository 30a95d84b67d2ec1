"""Persistence: policy documents, wall snapshots, datasets, traces and the audit log.

Every format is UTF-8 text with LF line endings.
"""
