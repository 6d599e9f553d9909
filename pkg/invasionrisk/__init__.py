"""Marine invasive-species pathway risk from climate matching and vessel mobility."""

__version__ = "0.1.0"
__author__ = "Gal Polak"
__email__ = "gal_polak@yahoo.com"
