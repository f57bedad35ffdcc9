"""Everything the travel-purpose views need, bundled per dataset."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

from ..tensor.rng import Rng
from .annotation import SemanticAnnotation, read_annotations
from .network import PoiSet, RoadNetwork, load_pois, load_road_network
from .text import TextEmbeddingProvider
from .views import ViewEncoder, entity_keys

ROADS_FILE = "roads.json"
POIS_FILE = "pois.csv"
ANNOTATIONS_FILE = "annotations.csv"


@dataclass
class SemanticContext:
    network: RoadNetwork
    pois: PoiSet
    provider: TextEmbeddingProvider
    annotations: Dict[int, SemanticAnnotation] = field(default_factory=dict)

    def road_encoder(self, embed_dim: int, num_heads: int, rng: Rng) -> ViewEncoder:
        keys = entity_keys("road", self.network.num_edges)
        return ViewEncoder.for_entities(keys, self.network.edge_desc, self.provider, embed_dim, num_heads, rng)

    def poi_encoder(self, embed_dim: int, num_heads: int, rng: Rng) -> ViewEncoder:
        keys = entity_keys("poi", len(self.pois))
        return ViewEncoder.for_entities(keys, self.pois.desc, self.provider, embed_dim, num_heads, rng)


def load_context(
    data_dir: Union[str, Path],
    provider: TextEmbeddingProvider,
    annotations_path: Optional[Union[str, Path]] = None,
) -> SemanticContext:
    root = Path(data_dir)
    annotations = {}
    path = Path(annotations_path) if annotations_path else root / ANNOTATIONS_FILE
    if path.exists():
        annotations = read_annotations(path)
    return SemanticContext(
        network=load_road_network(root / ROADS_FILE),
        pois=load_pois(root / POIS_FILE),
        provider=provider,
        annotations=annotations,
    )


__all__ = ["ANNOTATIONS_FILE", "POIS_FILE", "ROADS_FILE", "SemanticContext", "load_context"]
