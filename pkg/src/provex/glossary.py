"""Problem-space glosses for every canonical feature.

Each entry translates one feature into the system-level behavior it
measures, so decision-tree rules can be read back in plain language
by an analyst who has never seen the extraction code.
"""

from provex.features import CANONICAL_FEATURES

GLOSSARY: dict[str, str] = {
    # basic counts
    "n_nodes": ("total system entities (processes, files, sockets) touched; "
                "larger graphs mean a broader system footprint"),
    "n_edges": "total recorded system events, independent of entity count",
    "n_process": ("distinct processes; high values indicate multiprocessing "
                  "or long process chains"),
    "n_file": "distinct files touched; heavy filesystem interaction raises it",
    "n_socket": "distinct network endpoints contacted",
    "n_read": ("file read events; dominated by shared libraries, caches, and "
               "configuration loads"),
    "n_write": ("file write events; logs, results, and staged payloads all "
                "contribute"),
    "n_exec": "file execute events: binaries or scripts being launched",
    "n_fork": "child-process creations; measures multiprocessing intensity",
    "n_send": "outbound socket transmissions",
    "n_recv": "inbound socket receptions",
    "n_connect": "connection setups to network endpoints",
    # type-blind structural aggregates
    "all_degree_centrality": ("average share of the graph each entity "
                              "directly interacts with; hub entities touched "
                              "by much of the graph drive it up"),
    "all_closeness_centrality": ("average reachability of entities; small, "
                                 "tightly-knit graphs score higher than "
                                 "sprawling ones"),
    "all_betweenness_centrality": ("how often entities sit on the routes "
                                   "between other entities; linear pipelines "
                                   "with clear waypoints score high"),
    "all_eigenvector_centrality": ("influence concentration; exactly zero "
                                   "everywhere when information flow is "
                                   "strictly one-directional"),
    "all_triangles": ("prevalence of resources shared between a parent "
                      "process and its child; shared libraries, locks, and "
                      "logs are the usual cause"),
    "all_clustering_coefficient": ("how mutually related an entity's "
                                   "neighbors are, normalized by its own "
                                   "activity level"),
    # process-differentiated structural features
    "process_degree_centrality": ("share of the graph each process directly "
                                  "touches; flowers of resource accesses "
                                  "around single processes drive it up"),
    "process_closeness_centrality": (
        "reachability of processes: high when the program stays in a small "
        "region of the system and primarily performs reads; low when file or "
        "socket writes dominate and the program operates at scale"),
    "process_betweenness_centrality": (
        "linearity of the multiprocessing logic: maximized by chains that "
        "read at the start and write at the end; leaf processes and shortcut "
        "communication files lower it"),
    "process_eigenvector_centrality": (
        "ringleader signal: processes that bridge otherwise disconnected "
        "regions and control large information flows; zero when flow is "
        "strictly one-directional"),
    "process_triangles": ("resources shared between immediately related "
                          "processes; common around shared library, lock, "
                          "and log files"),
    "process_clustering_coefficient": (
        "how tightly a process shares resources with its immediate "
        "relatives; parents and children doing similar work cluster around "
        "shared lock and log files"),
    # file-differentiated structural features
    "file_degree_centrality": ("presence of important files shared across "
                               "several processes (logs, locks, libraries, "
                               "data files) and the overall prevalence of "
                               "file nodes"),
    "file_closeness_centrality": (
        "write share of file activity: files only read stay at zero, so "
        "high values indicate shared log and lock files while low values "
        "indicate libraries, caches, and configuration files"),
    "file_betweenness_centrality": (
        "dependence on files for inter-process communication: maximized "
        "when files bridge islands of processes, low when files are plain "
        "input or output"),
    "file_eigenvector_centrality": (
        "files used as communication channels between influential "
        "processes, typically lock or data files; zero when flow is "
        "strictly one-directional"),
    "file_triangles": ("files shared between a parent process and its "
                       "child; shared libraries, locks, and logs are the "
                       "usual cause"),
    "file_clustering_coefficient": ("how strongly files tie their "
                                    "neighboring processes together, "
                                    "relative to how many processes touch "
                                    "them"),
    # socket-differentiated structural features
    "socket_degree_centrality": ("network endpoints contacted by several "
                                 "processes, and the overall prominence of "
                                 "network activity"),
    "socket_closeness_centrality": ("reachability of network endpoints; "
                                    "positive when sockets receive traffic "
                                    "from well-connected processes"),
    "socket_betweenness_centrality": ("network endpoints relaying "
                                      "information between other entities"),
    "socket_eigenvector_centrality": ("network endpoints entangled in "
                                      "feedback loops with influential "
                                      "processes; zero when flow is "
                                      "strictly one-directional"),
    "socket_triangles": ("network endpoints shared between immediately "
                         "related processes"),
    "socket_clustering_coefficient": ("how tightly network endpoints bind "
                                      "their neighboring processes, "
                                      "relative to endpoint activity"),
    # security motifs and locality
    "dropper_triangles": ("payload staging: a process writes a file, then a "
                          "child of that process executes it; the classic "
                          "malware dropper structure"),
    "clone_triangles": ("self-cloning: a process executes a file, then a "
                        "child of that process executes the same file; "
                        "homogeneous parallelism seen both in fast-moving "
                        "malware and in multiprocessing workloads"),
    "probe_triangles": ("look-before-run: a process reads a file, then a "
                        "child of that process executes it; checks that a "
                        "target exists or is valid before invoking it, "
                        "common in quieter malware and dependency-heavy "
                        "programs"),
    "internal_socket_writes": ("outbound traffic to private-range "
                               "addresses; lateral movement and internal "
                               "flooding raise it"),
    "external_socket_writes": ("outbound traffic to public addresses; "
                               "command-and-control and internet-facing "
                               "communication raise it"),
    "internal_socket_reads": "inbound traffic from private-range addresses",
    "external_socket_reads": ("inbound traffic from public addresses, such "
                              "as downloads and remote responses"),
    "internal_sockets": ("distinct private-range endpoints contacted; "
                         "breadth of local-network reach"),
    "external_sockets": ("distinct public endpoints contacted; breadth of "
                         "internet reach"),
}


def gloss(feature: str) -> str:
    """Return the problem-space gloss for a canonical feature name."""
    try:
        return GLOSSARY[feature]
    except KeyError:
        raise ValueError(f"unknown feature {feature!r}") from None


def _check_complete() -> None:
    missing = set(CANONICAL_FEATURES) - GLOSSARY.keys()
    extra = GLOSSARY.keys() - set(CANONICAL_FEATURES)
    if missing or extra:
        raise AssertionError(f"glossary drift: missing={sorted(missing)} "
                             f"extra={sorted(extra)}")


_check_complete()
