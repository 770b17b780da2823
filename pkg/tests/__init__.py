"""
Test suite for ActBench.

Unit tests per package under ``unit/`` and end-to-end command tests under
``integration/``.
"""
