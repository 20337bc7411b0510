import numpy as np
import json


def size_of(x):
    return np.size(x)


np = 3
print(np.shape)


def late():
    return np.zeros(3)


def local_json(json):
    return json.dumps({})


def reassigns():
    json = None
    return json.loads("{}")


def uses_global():
    return json.loads("[]")
