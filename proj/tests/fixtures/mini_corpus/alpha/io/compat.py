try:
    import simplejson as json
except ImportError:
    import json

from . import loader
from .writer import write
from os.path import *


def dump(obj):
    return json.dumps(obj)


def reload_all(root):
    return loader.load_all(root), exists(root)
