"""Row-of-Thought table reasoning harness."""

__version__ = "0.1.0"
