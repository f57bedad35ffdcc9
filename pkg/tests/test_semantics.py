import numpy as np
import pytest
import requests

from src.errors import (
    ConfigurationError,
    EmbeddingLookupError,
    EmbeddingServiceError,
    EntityIndexError,
    FormatError,
    ParseError,
)
from src.semantics import text as text_module
from src.semantics.annotation import (
    SemanticAnnotation,
    annotate_trajectory,
    read_annotations,
    write_annotations,
)
from src.semantics.matching import (
    PoiIndex,
    SegmentIndex,
    map_match,
    nearest_poi,
    pick_nearest,
    point_segment_distances,
)
from src.semantics.network import PoiSet, RoadNetwork, load_pois, load_road_network, save_pois, save_road_network
from src.semantics.text import FileTextProvider, HashTextProvider, RemoteTextProvider, build_provider, save_text_table
from src.semantics.views import ViewEncoder, entity_keys, pad_ids, road_view
from src.tensor.rng import Rng
from src.trajectory.geo import haversine_vectorized
from src.trajectory.types import Trajectory

LNG0, LAT0, STEP = 104.05, 30.66, 0.001


def _grid_network(size: int = 3) -> RoadNetwork:
    nodes = [
        {"id": 100 + row * size + col, "lng": LNG0 + col * STEP, "lat": LAT0 + row * STEP}
        for row in range(size)
        for col in range(size)
    ]
    edges = []
    for row in range(size):
        for col in range(size):
            here = 100 + row * size + col
            for neighbour, ok in ((here + 1, col + 1 < size), (here + size, row + 1 < size)):
                if ok:
                    for start, end in ((here, neighbour), (neighbour, here)):
                        edges.append({"id": len(edges), "start": start, "end": end, "desc": f"road {len(edges)}"})
    return RoadNetwork.from_records(nodes, edges)


def _points(count: int, seed: int = 0) -> Trajectory:
    rng = np.random.default_rng(seed)
    lng = LNG0 - STEP + rng.uniform(0, 4 * STEP, count)
    lat = LAT0 - STEP + rng.uniform(0, 4 * STEP, count)
    return Trajectory(seed, lng, lat, np.arange(count) * 10)


def test_map_match_agrees_with_exhaustive_search():
    network = _grid_network()
    index = SegmentIndex(network)
    traj = _points(600)
    projected = index.project(traj.lng, traj.lat)
    distances = point_segment_distances(projected, index.starts, index.ends)
    expected = [pick_nearest(np.arange(network.num_edges), row) for row in distances]
    np.testing.assert_array_equal(map_match(traj, index), expected)
    np.testing.assert_array_equal(map_match(traj, network), expected)


def test_dataset_index_is_centred_on_the_trajectory_points():
    network = _grid_network()
    trajs = [_points(40, seed=1), _points(40, seed=2)]
    index = SegmentIndex.for_dataset(network, trajs)
    lng = np.concatenate([traj.lng for traj in trajs])
    lat = np.concatenate([traj.lat for traj in trajs])
    assert index.projection.lng0 == pytest.approx((lng.min() + lng.max()) / 2.0)
    assert index.projection.lat0 == pytest.approx((lat.min() + lat.max()) / 2.0)
    assert index.projection != SegmentIndex(network).projection

    projected = index.project(trajs[0].lng, trajs[0].lat)
    distances = point_segment_distances(projected, index.starts, index.ends)
    expected = [pick_nearest(np.arange(network.num_edges), row) for row in distances]
    np.testing.assert_array_equal(map_match(trajs[0], index), expected)
    assert SegmentIndex.for_dataset(network, []).projection == SegmentIndex(network).projection


def test_map_match_breaks_ties_towards_the_smaller_edge_id():
    network = _grid_network()
    # midpoint of the first horizontal edge; the edge and its reverse are equally close
    traj = Trajectory(1, [LNG0 + STEP / 2], [LAT0], [0])
    assert map_match(traj, network).tolist() == [0]


def test_point_segment_distance_clamps_to_endpoints():
    starts = np.array([[0.0, 0.0]])
    ends = np.array([[10.0, 0.0]])
    points = np.array([[5.0, 3.0], [-4.0, 3.0], [13.0, 4.0]])
    np.testing.assert_allclose(point_segment_distances(points, starts, ends)[:, 0], [3.0, 5.0, 5.0])


def test_nearest_poi_agrees_with_haversine_argmin():
    rng = np.random.default_rng(3)
    pois = PoiSet(
        lng=LNG0 + rng.uniform(0, 3 * STEP, 25),
        lat=LAT0 + rng.uniform(0, 3 * STEP, 25),
        desc=[f"poi {i}" for i in range(25)],
    )
    traj = _points(600, seed=4)
    expected = [
        int(np.argmin(haversine_vectorized(lng, lat, pois.lng, pois.lat))) for lng, lat in zip(traj.lng, traj.lat)
    ]
    np.testing.assert_array_equal(nearest_poi(traj, pois), expected)
    np.testing.assert_array_equal(nearest_poi(traj, PoiIndex(pois)), expected)


def test_duplicate_pois_resolve_to_the_smaller_id():
    pois = PoiSet(lng=np.array([LNG0 + STEP, LNG0, LNG0]), lat=np.array([LAT0, LAT0, LAT0]), desc=["a", "b", "c"])
    traj = Trajectory(1, [LNG0 + 1e-5], [LAT0], [0])
    assert nearest_poi(traj, pois).tolist() == [1]


def test_empty_indexes_are_rejected():
    empty = RoadNetwork.from_records([{"id": 1, "lng": LNG0, "lat": LAT0}], [])
    with pytest.raises(ConfigurationError):
        SegmentIndex(empty)
    with pytest.raises(ConfigurationError):
        PoiIndex(PoiSet(np.zeros(0), np.zeros(0), []))


def test_network_records_are_validated():
    nodes = [{"id": 1, "lng": LNG0, "lat": LAT0}, {"id": 2, "lng": LNG0 + STEP, "lat": LAT0}]
    with pytest.raises(FormatError):
        RoadNetwork.from_records(nodes, [{"id": 1, "start": 1, "end": 2, "desc": "gap"}])
    with pytest.raises(FormatError):
        RoadNetwork.from_records(nodes, [{"id": 0, "start": 1, "end": 9, "desc": "dangling"}])
    with pytest.raises(FormatError):
        RoadNetwork.from_records(nodes + [{"id": 1, "lng": 0, "lat": 0}], [])


def test_network_and_poi_files_round_trip(tmp_path):
    network = _grid_network()
    loaded = load_road_network(save_road_network(tmp_path / "roads.json", network))
    assert loaded.edge_desc == network.edge_desc
    np.testing.assert_array_equal(loaded.edge_start, network.edge_start)
    np.testing.assert_allclose(loaded.node_lng, network.node_lng, atol=1e-7)

    pois = PoiSet(np.array([LNG0, LNG0 + STEP]), np.array([LAT0, LAT0]), ["cafe, corner", "school"])
    restored = load_pois(save_pois(tmp_path / "pois.csv", pois))
    assert restored.desc == pois.desc
    np.testing.assert_allclose(restored.lat, pois.lat, atol=1e-7)


def test_poi_parse_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "pois.csv"
    path.write_text("poi_id,lng,lat,desc\n0,104.0,30.0,a\n1,east,30.0,b\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        load_pois(path)
    assert excinfo.value.line == 3
    path.write_text("id,lng,lat,desc\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        load_pois(path)
    assert excinfo.value.line == 1
    with pytest.raises(ConfigurationError):
        load_road_network(tmp_path / "missing.json")


def test_hash_provider_is_deterministic_unit_length():
    provider = HashTextProvider(8)
    first = provider.embed("road:0", "Main Street")
    assert first.shape == (8,)
    assert np.linalg.norm(first) == pytest.approx(1.0)
    np.testing.assert_array_equal(first, HashTextProvider(8).embed("other", "Main Street"))
    assert not np.allclose(first, provider.embed("road:0", "Side Street"))


def test_text_providers_must_implement_embed():
    with pytest.raises(TypeError):
        text_module.TextEmbeddingProvider()

    class Incomplete(text_module.TextEmbeddingProvider):
        dim = 2

    with pytest.raises(TypeError):
        Incomplete()

    class Constant(text_module.TextEmbeddingProvider):
        dim = 2

        def embed(self, key, text):
            return np.ones(2)

    np.testing.assert_array_equal(Constant().embed_many([("a", "x"), ("b", "y")]), np.ones((2, 2)))


def test_file_provider_looks_up_by_key(tmp_path):
    save_text_table(tmp_path / "table", {"poi:0": np.ones(3), "poi:1": np.zeros(3)})
    provider = FileTextProvider(tmp_path / "table")
    assert provider.dim == 3
    np.testing.assert_array_equal(provider.embed_many([("poi:1", ""), ("poi:0", "")]), [[0, 0, 0], [1, 1, 1]])
    with pytest.raises(EmbeddingLookupError):
        provider.embed("poi:2", "unknown")


class _FakeResponse:
    def __init__(self, payload):
        self.payload = payload

    def raise_for_status(self):
        pass

    def json(self):
        return self.payload


class _FakeSession:
    def __init__(self, fail: bool = False):
        self.fail = fail
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        if self.fail:
            raise requests.ConnectionError("service down")
        return _FakeResponse({"data": [{"embedding": [float(len(text)), 1.0]} for text in json["input"]]})


def test_remote_provider_batches_and_caches(tmp_path):
    session = _FakeSession()
    provider = RemoteTextProvider("http://embed.local/v1", tmp_path / "cache", token="secret", session=session)
    vectors = provider.embed_many([("road:0", "abc"), ("road:1", "hello")])
    np.testing.assert_array_equal(vectors, [[3.0, 1.0], [5.0, 1.0]])
    assert session.calls[0]["headers"] == {"Authorization": "Bearer secret"}
    assert session.calls[0]["json"] == {"input": ["abc", "hello"]}

    provider.embed("road:0", "abc")
    assert len(session.calls) == 1

    offline = RemoteTextProvider("http://embed.local/v1", tmp_path / "cache", session=_FakeSession(fail=True))
    assert offline.dim == 2
    np.testing.assert_array_equal(offline.embed("road:1", "hello"), [5.0, 1.0])


def test_remote_provider_gives_up_after_retries(tmp_path, monkeypatch):
    monkeypatch.setattr(text_module.time, "sleep", lambda seconds: None)
    session = _FakeSession(fail=True)
    provider = RemoteTextProvider("http://embed.local/v1", tmp_path / "cache", session=session)
    with pytest.raises(EmbeddingServiceError):
        provider.embed("poi:0", "park")
    assert len(session.calls) == text_module.MAX_ATTEMPTS


def test_build_provider_validates_kind(tmp_path):
    assert isinstance(build_provider("hash", dim=4), HashTextProvider)
    with pytest.raises(ConfigurationError):
        build_provider("file")
    with pytest.raises(ConfigurationError):
        build_provider("remote", table_path=tmp_path)
    with pytest.raises(ConfigurationError):
        build_provider("psychic")


def _view_encoder(count: int = 5) -> ViewEncoder:
    keys = entity_keys("road", count)
    return ViewEncoder.for_entities(keys, [f"road {i}" for i in range(count)], HashTextProvider(6), 8, 2, Rng(1))


def test_view_encoder_ignores_padding(f64):
    encoder = _view_encoder()
    alone = road_view(np.array([2, 0, 1]), encoder).data
    ids, mask = pad_ids([np.array([2, 0, 1]), np.array([1, 1, 1, 1, 4])])
    together = encoder(ids, mask).data
    assert together.shape == (2, 8)
    np.testing.assert_allclose(together[0], alone, rtol=1e-10, atol=1e-12)


def test_view_encoder_keeps_text_vectors_frozen(f64):
    encoder = _view_encoder()
    names = [name for name, _ in encoder.named_parameters()]
    assert not any("text_vectors" in name for name in names)
    assert "layer1.attention.query.weight" in names
    with pytest.raises(EntityIndexError):
        encoder.entity_embedding(np.array([5]))


def test_annotations_round_trip(tmp_path):
    network = _grid_network()
    pois = PoiSet(np.array([LNG0, LNG0 + 2 * STEP]), np.array([LAT0, LAT0 + 2 * STEP]), ["a", "b"])
    items = [annotate_trajectory(_points(6, seed=s), SegmentIndex(network), PoiIndex(pois)) for s in range(3)]
    restored = read_annotations(write_annotations(tmp_path / "annotations.csv", items))
    assert sorted(restored) == [0, 1, 2]
    for item in items:
        np.testing.assert_array_equal(restored[item.traj_id].edge_ids, item.edge_ids)
        np.testing.assert_array_equal(restored[item.traj_id].poi_ids, item.poi_ids)


def test_annotation_parse_errors(tmp_path):
    path = tmp_path / "annotations.csv"
    path.write_text("traj_id,edge_ids,poi_ids\n0,1 2,3 4\n1,1 x,3 4\n", encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        read_annotations(path)
    assert excinfo.value.line == 3
    path.write_text("traj_id,edge_ids,poi_ids\n0,1 2,3\n", encoding="utf-8")
    with pytest.raises(ParseError):
        read_annotations(path)
    with pytest.raises(FormatError):
        SemanticAnnotation(0, np.array([1, 2]), np.array([1]))
