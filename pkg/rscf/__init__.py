# Rate-splitting cell-free MU-MIMO simulator package
__version__ = "0.3.0"
