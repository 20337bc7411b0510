import os
import os.path
from os.path import join, isfile as is_file
import pandas as pd


def load_all(root):
    out = []
    for name in os.listdir(root):
        path = join(root, name)
        if is_file(path) and path.endswith(".csv"):
            out.append(pd.read_csv(path, sep=","))
    return pd.concat(out)
