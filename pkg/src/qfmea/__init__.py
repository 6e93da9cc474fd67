"""Compositional qualitative models for automated hazard and impact analysis."""
