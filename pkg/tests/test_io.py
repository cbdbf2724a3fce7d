"""Document round-trips must be byte-exact and reject malformed input."""

import json

import pytest

from sweepout.complex import empty_configuration, validate
from sweepout.io import (
    DocumentError,
    configuration_from_doc,
    configuration_to_doc,
    parse_configuration,
    same_configuration,
    serialize_configuration,
)

from helpers import chain_config, crossing_sphere_config, disjoint_orbit_config


CONFIGS = {
    "empty": empty_configuration,
    "disjoint": disjoint_orbit_config,
    "chain": chain_config,
    "partial": crossing_sphere_config,
}


@pytest.mark.parametrize("name", sorted(CONFIGS))
def test_round_trip_is_byte_exact(name):
    config = CONFIGS[name]()
    text = serialize_configuration(config)
    again = parse_configuration(text)
    assert serialize_configuration(again) == text
    assert same_configuration(config, again)


def test_round_trip_preserves_validity():
    config = chain_config()
    again = parse_configuration(serialize_configuration(config))
    assert validate(again).ok
    assert again.outside_region == config.outside_region
    assert again.phi == config.phi


def test_serialization_is_deterministic():
    a = serialize_configuration(chain_config())
    b = serialize_configuration(chain_config())
    assert a == b


def test_doc_lists_are_id_sorted():
    doc = configuration_to_doc(chain_config())
    for key in ("curves", "spheres", "faces", "regions"):
        ids = [entry["id"] for entry in doc[key]]
        assert ids == sorted(ids)


def test_rejects_wrong_legend():
    doc = configuration_to_doc(empty_configuration())
    doc["colors"] = ["red", "blue", "green"]
    with pytest.raises(DocumentError):
        configuration_from_doc(doc)


def test_rejects_bad_sign():
    doc = configuration_to_doc(crossing_sphere_config())
    doc["vertices"][0]["sign"] = 2
    with pytest.raises(DocumentError):
        configuration_from_doc(doc)


def test_rejects_bad_dart():
    doc = configuration_to_doc(crossing_sphere_config())
    doc["spheres"][0]["rotation"]["10"][0] = [3, 0, 0]
    with pytest.raises(DocumentError):
        configuration_from_doc(doc)


def test_rejects_repeated_id():
    doc = configuration_to_doc(chain_config())
    doc["regions"].append(dict(doc["regions"][0]))
    with pytest.raises(DocumentError):
        configuration_from_doc(doc)


def test_rejects_bad_cycle():
    doc = configuration_to_doc(chain_config())
    doc["faces"][0]["cycles"][0] = ["x", 3, 0]
    with pytest.raises(DocumentError):
        configuration_from_doc(doc)


def test_rejects_non_json():
    with pytest.raises(DocumentError):
        parse_configuration("{not json")


def test_doc_is_plain_json():
    text = serialize_configuration(chain_config())
    doc = json.loads(text)
    assert set(doc) == {
        "colors", "vertices", "curves", "spheres", "faces",
        "regions", "phi", "outside_region", "engine_built",
    }
