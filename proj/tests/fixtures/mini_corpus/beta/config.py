import yaml
import toml


def load(path):
    global yaml
    with open(path) as fh:
        return yaml.safe_load(fh)


def load_toml(path):
    toml = None

    def inner():
        nonlocal toml
        return toml.load(path)
    return inner()
