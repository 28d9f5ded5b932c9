"""Tests for the Min Mask Sketch workbench."""
