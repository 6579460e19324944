import json

import pytest

from coac.workload import (
    LayerKind,
    LayerShape,
    Network,
    WorkloadError,
    bundled_workload,
    bundled_workloads,
    layer_macs,
    load_workload,
    network_from_dict,
    network_macs,
    network_to_dict,
    resolve_workload,
    save_workload,
)


def test_layer_macs_and_input_extent():
    layer = LayerShape(id=0, k=4, c=3, ox=5, oy=6, fx=3, fy=2)
    assert layer_macs(layer) == 4 * 3 * 5 * 6 * 3 * 2
    assert (layer.ix, layer.iy) == (7, 7)


def test_depthwise_requires_unit_c_and_k():
    LayerShape(id=0, kind=LayerKind.DEPTHWISE, g=32, ox=4, oy=4, fx=3, fy=3)
    with pytest.raises(WorkloadError):
        LayerShape(id=0, kind=LayerKind.DEPTHWISE, g=32, c=2)


def test_classical_rejects_groups():
    with pytest.raises(WorkloadError):
        LayerShape(id=0, g=2)


@pytest.mark.parametrize("bad", [0, -3, 2.5, True])
def test_non_positive_dims_rejected(bad):
    with pytest.raises(WorkloadError):
        LayerShape(id=0, k=bad)


def test_network_ids_unique_and_increasing():
    a, b = LayerShape(id=1), LayerShape(id=2)
    Network("n", (a, b))
    with pytest.raises(WorkloadError):
        Network("n", (a, a))
    with pytest.raises(WorkloadError):
        Network("n", (b, a))
    with pytest.raises(WorkloadError):
        Network("n", ())


def test_file_round_trip(tmp_path):
    net = Network("tiny", (
        LayerShape(id=0, k=8, c=3, ox=16, oy=16, fx=3, fy=3),
        LayerShape(id=1, kind=LayerKind.DEPTHWISE, g=8, ox=16, oy=16, fx=3, fy=3),
    ))
    path = tmp_path / "tiny.json"
    save_workload(net, path)
    assert load_workload(path) == net
    assert resolve_workload(str(path)) == net


@pytest.mark.parametrize("entry, msg", [
    ({"type": "dw", "G": 4, "K": 2}, "not allowed"),
    ({"type": "conv", "G": 2}, "not allowed"),
    ({"type": "pool"}, "type"),
    ({"K": 2, "STRIDE": 2}, "unknown"),
])
def test_parse_errors(entry, msg):
    with pytest.raises(WorkloadError, match=msg):
        network_from_dict({"name": "x", "layers": [entry]})


def test_invalid_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(WorkloadError):
        load_workload(path)


def test_bundled_workloads_load():
    names = bundled_workloads()
    assert {"mobilenetv2", "resnet18", "rced"} <= set(names)
    for name in names:
        net = bundled_workload(name)
        assert net.name == name
        assert network_macs(net) > 0
        assert network_from_dict(json.loads(json.dumps(network_to_dict(net)))) == net


def test_mobilenet_has_depthwise_layers():
    net = bundled_workload("mobilenetv2")
    kinds = {layer.kind for layer in net}
    assert kinds == {LayerKind.CLASSICAL, LayerKind.DEPTHWISE}
    first_dw = next(layer for layer in net if layer.kind is LayerKind.DEPTHWISE)
    assert (first_dw.g, first_dw.ox, first_dw.fx) == (32, 112, 3)


def test_unknown_workload_name():
    with pytest.raises(WorkloadError):
        resolve_workload("no-such-network")
