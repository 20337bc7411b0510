import datetime as dt
from datetime import timedelta


def tomorrow():
    return dt.datetime.now() + timedelta(days=1)


def parse(s, fmt="%Y-%m-%d"):
    return dt.datetime.strptime(s, fmt).date()
