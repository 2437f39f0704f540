"""memescope: multimodal embedding analytics and meme-variant discovery."""

from .store import EmbeddingStore, Modality, PostPair, SearchHit, cosine, write_emb1
from .vecops import (CombineSpec, PairedCorpus, combine, cross_modal_fuse,
                     fuse_pair, recall_at_k, semantic_capture_check)
from .clustering import (Centroid, Cluster, ClusterResult, ClusterSource,
                         DbscanParams, centroid, dbscan, filter_clusters)
from .annotation import (Annotation, AnnotationDoc, assemble_document,
                         extract_keyphrases, select_annotation)
from .hate import (ClusterScore, HateVerdictRule, Label, ProviderResult,
                   StubLexiconProvider, classify, is_hateful, score_cluster)
from .communities import (ClusterGraph, CommunityPartition, build_graph,
                          louvain, score_communities)
from .evolution import (PRESETS, EntityInfluencer, EvolutionThresholds,
                        VariantTriplet, entity_variants, find_influencers,
                        find_variants, sweep)
from .temporal import PhashGroup, TimeSeries, group_by_phash, phash, weekly_series
from .synth import SynthSpec, generate
from .pipeline import RunManifest, run_pipeline
from .verdicts import VerdictLog, VerdictRecord

__version__ = "0.1.0"
