"""Road/POI data, map matching, text embeddings and view encoders."""

from .annotation import SemanticAnnotation, annotate_trajectory, read_annotations, write_annotations
from .context import SemanticContext, load_context
from .matching import PoiIndex, SegmentIndex, map_match, nearest_poi
from .network import PoiSet, RoadNetwork, load_pois, load_road_network
from .text import FileTextProvider, HashTextProvider, RemoteTextProvider, build_provider, text_embed
from .views import ViewEncoder, poi_view, road_view

__all__ = [
    "FileTextProvider",
    "HashTextProvider",
    "PoiIndex",
    "PoiSet",
    "RemoteTextProvider",
    "RoadNetwork",
    "SegmentIndex",
    "SemanticAnnotation",
    "SemanticContext",
    "ViewEncoder",
    "annotate_trajectory",
    "build_provider",
    "load_context",
    "load_pois",
    "load_road_network",
    "map_match",
    "nearest_poi",
    "poi_view",
    "read_annotations",
    "road_view",
    "text_embed",
    "write_annotations",
]
