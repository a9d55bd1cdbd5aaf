"""Tests for ast-import-analyzer."""
