import hashlib
import json


def canonical_json(payload):
    """
    Serialize `payload` with sorted keys and fixed separators so the
    same data always gives the same bytes.
    """
    return json.dumps(payload, sort_keys=True, separators=(',', ':'))


def config_hash(payload):
    return hashlib.sha256(canonical_json(payload).encode('utf-8')).hexdigest()


def format_float(value):
    return '{:.12g}'.format(float(value))
