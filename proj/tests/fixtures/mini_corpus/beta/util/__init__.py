from .strings import clean
