"""Scott analysis of finite rational metric spaces."""

__version__ = "0.1.0"
