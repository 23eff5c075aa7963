"""Desk-scale appliance control over a simulated parallel-port interface box."""

import logging

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())
