import urllib.parse
import json


def build(url, **json_kw):
    parts = urllib.parse.urlparse(url)
    return dict(json=json.dumps(parts._asdict(), indent=2), **json_kw)
