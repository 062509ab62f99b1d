"""Template guarantees, determinism, and corpus export round-trips."""

import csv
import re
from collections import Counter

import pytest

from provex.graphs import EdgeOp, GraphFormatError, NodeKind, dumps_graph, validate_graph
from provex.features import extract
from provex.security import motif_counts
from provex.synth import (
    MANIFEST_COLUMNS,
    PRESETS,
    TEMPLATES,
    Corpus,
    export_corpus,
    generate,
    hash_split,
    load_corpus,
    preset_malware,
    preset_malware_mini,
    preset_program,
)

SPEC_NAMES = {
    "benign-flower", "benign-chain", "dropper-chain",
    "ddos-internal", "ddos-external", "clone-probe-storm",
}


class TestRegistry:
    def test_all_templates_present(self):
        assert SPEC_NAMES <= set(TEMPLATES)
        assert {"benign-resolver", "benign-shared-db"} <= set(TEMPLATES)
        assert len(TEMPLATES) == 8

    def test_default_labels(self):
        for name, t in TEMPLATES.items():
            assert t.name == name
            expected = "benign" if name.startswith("benign") else "malicious"
            assert t.label == expected

    def test_family_tags(self):
        fams = {t.family for t in TEMPLATES.values()}
        assert fams == {"flower", "chain", "resolver", "shared-db",
                        "dropper", "ddos", "clone-storm"}

    def test_overrides_do_not_mutate_registry(self):
        t = TEMPLATES["dropper-chain"].with_params(links=(3, 3)).with_label("x")
        assert TEMPLATES["dropper-chain"].params["links"] == (2, 5)
        assert TEMPLATES["dropper-chain"].label == "malicious"
        assert t.params["links"] == (3, 3) and t.label == "x"


class TestForcedParameters:
    def test_dropper_forced_length_three(self):
        t = TEMPLATES["dropper-chain"].with_params(links=(3, 3))
        for g in generate(t, 10, seed=1).graphs:
            assert motif_counts(g).dropper_triangles == 3

    def test_ddos_external_seven_single_sends(self):
        t = TEMPLATES["ddos-external"].with_params(
            children=(7, 7), sockets=(1, 1), sends=(1, 1))
        for g in generate(t, 10, seed=2).graphs:
            c = motif_counts(g)
            assert c.external_socket_writes == 7
            assert c.external_sockets == 7
            assert c.internal_socket_writes == 0

    def test_storm_forty_probe_rounds(self):
        t = TEMPLATES["clone-probe-storm"].with_params(probe_rounds=(40, 40))
        for g in generate(t, 5, seed=3).graphs:
            assert motif_counts(g).probe_triangles == 40

    def test_storm_four_clones(self):
        t = TEMPLATES["clone-probe-storm"].with_params(clones=(4, 4))
        for g in generate(t, 5, seed=4).graphs:
            assert motif_counts(g).clone_triangles == 4


class TestTemplateGuarantees:
    @pytest.mark.parametrize("name", sorted(TEMPLATES))
    def test_every_graph_is_valid(self, name):
        for g in generate(TEMPLATES[name], 15, seed=11).graphs:
            validate_graph(g)

    def test_flower_shape(self):
        t = TEMPLATES["benign-flower"].with_params(reads=(10, 10), log_writes=(2, 2))
        g = generate(t, 1, seed=0).graphs[0]
        kinds = Counter(n.kind for n in g.nodes)
        assert kinds[NodeKind.PROCESS] == 1
        assert kinds[NodeKind.FILE] == 12
        assert kinds[NodeKind.SOCKET] == 0
        ops = Counter(e.op for e in g.edges)
        assert ops[EdgeOp.READ] == 10 and ops[EdgeOp.WRITE] == 2
        c = motif_counts(g)
        assert (c.dropper_triangles, c.clone_triangles, c.probe_triangles) == (0, 0, 0)
        assert c.external_socket_writes == 0

    def test_benign_templates_have_no_motifs(self):
        for name in ("benign-flower", "benign-chain", "benign-shared-db"):
            for g in generate(TEMPLATES[name], 10, seed=5).graphs:
                c = motif_counts(g)
                assert c == type(c)()  # every field zero

    def test_benign_templates_never_exec(self):
        for name in ("benign-flower", "benign-chain", "benign-resolver",
                     "benign-shared-db"):
            for g in generate(TEMPLATES[name], 10, seed=6).graphs:
                assert not any(e.op is EdgeOp.EXEC for e in g.edges)

    def test_resolver_is_internal_only(self):
        for g in generate(TEMPLATES["benign-resolver"], 10, seed=7).graphs:
            c = motif_counts(g)
            assert c.internal_sockets >= 3
            assert c.internal_socket_writes >= c.internal_sockets
            assert c.internal_socket_reads == c.internal_sockets
            assert c.external_sockets == 0
            assert (c.dropper_triangles, c.clone_triangles, c.probe_triangles) == (0, 0, 0)

    def test_shared_db_is_multi_process(self):
        for g in generate(TEMPLATES["benign-shared-db"], 10, seed=8).graphs:
            kinds = Counter(n.kind for n in g.nodes)
            assert 2 <= kinds[NodeKind.PROCESS] <= 4
            assert kinds[NodeKind.SOCKET] == 0

    def test_dropper_range(self):
        for g in generate(TEMPLATES["dropper-chain"], 15, seed=9).graphs:
            c = motif_counts(g)
            assert 2 <= c.dropper_triangles <= 5
            assert c.clone_triangles == 0 and c.probe_triangles == 0
            assert c.internal_sockets == 0 and c.external_sockets == 0

    def test_ddos_internal_range(self):
        for g in generate(TEMPLATES["ddos-internal"], 10, seed=10).graphs:
            c = motif_counts(g)
            assert c.internal_socket_writes >= 10  # >= 5 children x 2 sockets
            assert c.external_sockets == 0
            fork_count = sum(1 for e in g.edges if e.op is EdgeOp.FORK)
            assert 5 <= fork_count <= 15

    def test_ddos_external_range(self):
        for g in generate(TEMPLATES["ddos-external"], 10, seed=12).graphs:
            c = motif_counts(g)
            assert c.external_socket_writes >= 5 * c.external_sockets
            assert c.internal_sockets == 0

    def test_storm_ranges(self):
        for g in generate(TEMPLATES["clone-probe-storm"], 10, seed=13).graphs:
            c = motif_counts(g)
            assert 20 <= c.probe_triangles <= 60
            assert 1 <= c.clone_triangles <= 5
            assert c.dropper_triangles == 0


class TestDeterminism:
    def test_same_seed_same_bytes(self):
        t = TEMPLATES["benign-chain"]
        a = [dumps_graph(g) for g in generate(t, 20, seed=21).graphs]
        b = [dumps_graph(g) for g in generate(t, 20, seed=21).graphs]
        assert a == b

    def test_different_seeds_differ(self):
        t = TEMPLATES["benign-flower"]
        a = generate(t, 5, seed=1).graphs
        b = generate(t, 5, seed=2).graphs
        assert [g.graph_id for g in a] != [g.graph_id for g in b]

    def test_graph_id_format(self):
        g = generate(TEMPLATES["dropper-chain"], 3, seed=7).graphs[2]
        assert g.graph_id == "dropper-chain-s7-g0002"
        assert re.fullmatch(r"[a-z-]+-s\d+-g\d{4}", g.graph_id)

    def test_count_and_labels(self):
        corpus = generate(TEMPLATES["ddos-internal"], 9, seed=3)
        assert len(corpus) == 9
        assert all(g.label == "malicious" for g in corpus.graphs)
        assert all(corpus.families[g.graph_id] == "ddos" for g in corpus.graphs)

    def test_count_must_be_positive(self):
        with pytest.raises(ValueError, match="count"):
            generate(TEMPLATES["benign-flower"], 0)


class TestNoise:
    def test_noise_adds_edges_but_no_motifs(self):
        clean = TEMPLATES["dropper-chain"].with_params(links=(4, 4))
        noisy = clean.with_noise(0.1)
        g_clean = generate(clean, 1, seed=5).graphs[0]
        g_noisy = generate(noisy, 1, seed=5).graphs[0]
        assert len(g_noisy.edges) == len(g_clean.edges) + round(0.1 * len(g_clean.edges))
        assert motif_counts(g_noisy) == motif_counts(g_clean)
        assert motif_counts(g_noisy).dropper_triangles == 4

    def test_noise_is_deterministic(self):
        t = TEMPLATES["benign-flower"].with_noise(0.08)
        a = [dumps_graph(g) for g in generate(t, 10, seed=6).graphs]
        b = [dumps_graph(g) for g in generate(t, 10, seed=6).graphs]
        assert a == b

    def test_noise_range_enforced(self):
        with pytest.raises(ValueError, match="noise"):
            generate(TEMPLATES["benign-flower"].with_noise(0.2), 1)
        with pytest.raises(ValueError, match="noise"):
            generate(TEMPLATES["benign-flower"].with_noise(-0.01), 1)


def small_corpus():
    corpus = generate(TEMPLATES["benign-flower"], 6, seed=1)
    corpus.extend(generate(TEMPLATES["dropper-chain"], 4, seed=2))
    return corpus


class TestExport:
    def test_file_count_and_manifest_rows(self, tmp_path):
        corpus = small_corpus()
        manifest = export_corpus(corpus, tmp_path / "c")
        files = sorted((tmp_path / "c").glob("*.json"))
        assert len(files) == 10
        with open(manifest, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == list(MANIFEST_COLUMNS)
        assert len(rows) == 11

    def test_manifest_splits_match_hash(self, tmp_path):
        corpus = small_corpus()
        manifest = export_corpus(corpus, tmp_path / "c")
        with open(manifest, newline="") as fh:
            for row in csv.DictReader(fh):
                assert row["split"] == hash_split(row["graph_id"])

    def test_export_is_byte_identical(self, tmp_path):
        corpus = small_corpus()
        export_corpus(corpus, tmp_path / "a")
        export_corpus(corpus, tmp_path / "b")
        a_files = sorted((tmp_path / "a").iterdir())
        b_files = sorted((tmp_path / "b").iterdir())
        assert [f.name for f in a_files] == [f.name for f in b_files]
        for fa, fb in zip(a_files, b_files):
            assert fa.read_bytes() == fb.read_bytes()

    def test_round_trip_preserves_features(self, tmp_path):
        corpus = small_corpus()
        export_corpus(corpus, tmp_path / "c")
        loaded = load_corpus(tmp_path / "c")
        assert [g.graph_id for g in loaded.graphs] == [g.graph_id for g in corpus.graphs]
        assert loaded.families == corpus.families
        for before, after in zip(corpus.graphs, loaded.graphs):
            assert dumps_graph(before) == dumps_graph(after)
            va, vb = extract(before), extract(after)
            assert [repr(x) for x in va.as_list()] == [repr(x) for x in vb.as_list()]

    def test_loaded_splits_recorded(self, tmp_path):
        corpus = small_corpus()
        export_corpus(corpus, tmp_path / "c")
        loaded = load_corpus(tmp_path / "c")
        assert set(loaded.splits.values()) <= {"train", "test"}
        assert len(loaded.splits) == 10
        for gid, split in loaded.splits.items():
            assert loaded.split_of(gid) == split


class TestLoadErrors:
    def test_missing_manifest(self, tmp_path):
        with pytest.raises(GraphFormatError, match="manifest"):
            load_corpus(tmp_path)

    def _exported(self, tmp_path):
        export_corpus(generate(TEMPLATES["benign-flower"], 3, seed=1), tmp_path)
        return tmp_path / "manifest.csv"

    def test_label_mismatch(self, tmp_path):
        manifest = self._exported(tmp_path)
        with open(manifest, newline="") as fh:
            rows = list(csv.reader(fh))
        rows[1][1] = "evil"
        with open(manifest, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        with pytest.raises(GraphFormatError, match="label mismatch"):
            load_corpus(tmp_path)

    def test_bad_split_value(self, tmp_path):
        manifest = self._exported(tmp_path)
        text = manifest.read_text().replace("train", "dev").replace("test", "dev")
        manifest.write_text(text)
        with pytest.raises(GraphFormatError, match="split"):
            load_corpus(tmp_path)

    def test_missing_column(self, tmp_path):
        manifest = self._exported(tmp_path)
        lines = manifest.read_text().splitlines()
        lines[0] = "graph_id,label,family"
        manifest.write_text("\n".join(lines) + "\n")
        with pytest.raises(GraphFormatError, match="split"):
            load_corpus(tmp_path)

    def test_missing_graph_file(self, tmp_path):
        self._exported(tmp_path)
        next(tmp_path.glob("benign-flower-*.json")).unlink()
        with pytest.raises(GraphFormatError, match="cannot read"):
            load_corpus(tmp_path)


class TestHashSplit:
    def test_deterministic(self):
        assert hash_split("abc") == hash_split("abc")

    def test_ratio_near_eighty_percent(self):
        ids = [f"graph-{i}" for i in range(1000)]
        train = sum(1 for gid in ids if hash_split(gid) == "train")
        assert 0.74 <= train / 1000 <= 0.86

    def test_both_splits_occur_in_presets(self):
        corpus = preset_malware_mini()
        splits = {corpus.split_of(g.graph_id) for g in corpus.graphs}
        assert splits == {"train", "test"}


class TestPresets:
    def test_registry(self):
        assert set(PRESETS) == {"malware", "program", "malware-mini"}

    def test_malware_composition(self):
        corpus = preset_malware()
        assert len(corpus) == 600
        labels = Counter(g.label for g in corpus.graphs)
        assert labels == {"benign": 300, "malicious": 300}
        families = Counter(corpus.families[g.graph_id] for g in corpus.graphs)
        assert families == {"flower": 150, "chain": 150, "dropper": 100,
                            "ddos": 100, "clone-storm": 100}
        assert len({g.graph_id for g in corpus.graphs}) == 600

    def test_program_composition(self):
        corpus = preset_program()
        assert len(corpus) == 300
        labels = Counter(g.label for g in corpus.graphs)
        assert labels == {"flower": 75, "chain": 75, "resolver": 75, "shared-db": 75}

    def test_mini_composition(self):
        corpus = preset_malware_mini()
        assert len(corpus) == 48
        labels = Counter(g.label for g in corpus.graphs)
        assert labels == {"benign": 24, "malicious": 24}

    def test_mini_deterministic(self):
        a = [dumps_graph(g) for g in preset_malware_mini(3).graphs]
        b = [dumps_graph(g) for g in preset_malware_mini(3).graphs]
        assert a == b

    def test_seed_changes_preset(self):
        a = [dumps_graph(g) for g in preset_malware_mini(0).graphs]
        b = [dumps_graph(g) for g in preset_malware_mini(1).graphs]
        assert a != b
