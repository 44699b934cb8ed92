from .graph_core import build_graph, read_edge_list, largest_connected_component
from .sampling import SnowballSampler, snowball_build, active_players, prune_inactive, top_games, game_subgraph
from .metrics import profile, profile_corpus, StructuralProfile
from .powerlaw_fit import powerlaw_fit, PowerLawFit
from .embedding import wl_document, train, EmbeddingModel
from .clustering import kmeans, sweep, silhouette
from .characterization import tfidf_select, build_cluster_profiles
from .steam_client import FixtureProvider, SteamWebAPI, derive_activity

__all__ = [
    'build_graph',
    'read_edge_list',
    'largest_connected_component',
    'SnowballSampler',
    'snowball_build',
    'active_players',
    'prune_inactive',
    'top_games',
    'game_subgraph',
    'profile',
    'profile_corpus',
    'StructuralProfile',
    'powerlaw_fit',
    'PowerLawFit',
    'wl_document',
    'train',
    'EmbeddingModel',
    'kmeans',
    'sweep',
    'silhouette',
    'tfidf_select',
    'build_cluster_profiles',
    'FixtureProvider',
    'SteamWebAPI',
    'derive_activity',
]
