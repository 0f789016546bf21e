"""Reference-free omnidirectional multi-view stereo on synthetic fisheye rigs."""

__version__ = "0.1.0"
