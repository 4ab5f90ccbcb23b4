"""Ray-cast compliance checks for the EN 17037 "View out" and
"Exposure to sunlight" criteria."""

__version__ = "0.1.0"
