"""syncs: code-switching corpus toolkit"""
