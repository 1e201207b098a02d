"""Transfer-learning detection of ANNNI phase transitions with a quantum
Hamming-distance classifier and a classical KNN baseline."""

__version__ = "1.0.0"

ARTIFACT_VERSION = 1
