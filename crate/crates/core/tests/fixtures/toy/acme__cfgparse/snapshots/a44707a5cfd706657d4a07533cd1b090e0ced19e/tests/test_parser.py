from cfgparse import Parser


def test_parse():
    assert Parser().parse("[a]\nx=1") == {"a": {"x": "1"}}
