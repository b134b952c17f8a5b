import io
import itertools

import numpy as np
import pytest

from conftest import two_triangles
from ndcn.errors import FormatError
from ndcn.graphgen import (
    Graph,
    default_partition_sizes,
    gen_barabasi_albert,
    gen_erdos_renyi,
    gen_grid8,
    gen_newman_watts,
    gen_random_partition,
    greedy_modularity_communities,
    greedy_modularity_reorder,
    read_edgelist,
    write_edgelist,
)


def brute_force_grid8_edges(side):
    """Independent enumeration of all Moore-neighbor pairs."""
    edges = set()
    for r1, c1 in itertools.product(range(side), repeat=2):
        for r2, c2 in itertools.product(range(side), repeat=2):
            if (r1, c1) != (r2, c2) and abs(r1 - r2) <= 1 and abs(c1 - c2) <= 1:
                u, v = r1 * side + c1, r2 * side + c2
                edges.add((min(u, v), max(u, v)))
    return edges


class TestGrid8:
    def test_n2_is_k4(self):
        g = gen_grid8(2)
        assert g.n == 4
        assert g.num_edges == 6
        assert np.all(g.degree == 3)

    def test_n3_degrees_and_count(self):
        g = gen_grid8(3)
        # corners 3, edge-centers 5, center 8
        assert sorted(g.degree.tolist()) == [3, 3, 3, 3, 5, 5, 5, 5, 8]
        assert g.degree[4] == 8  # center of the 3x3 grid
        assert g.num_edges == 20

    def test_paper_scale(self):
        assert gen_grid8(20).n == 400

    @pytest.mark.parametrize("side", [2, 3, 4, 5, 6])
    def test_matches_brute_force_and_formula(self, side):
        g = gen_grid8(side)
        expected = brute_force_grid8_edges(side)
        assert set(map(tuple, g.edges.tolist())) == expected
        assert g.num_edges == 4 * side**2 - 6 * side + 2

    def test_rejects_small_side(self):
        with pytest.raises(ValueError):
            gen_grid8(1)


class TestErdosRenyi:
    def test_p_zero(self):
        assert gen_erdos_renyi(10, 0.0, seed=1).num_edges == 0

    def test_p_one_is_complete(self):
        assert gen_erdos_renyi(10, 1.0, seed=1).num_edges == 45

    def test_edge_count_in_binomial_band(self):
        # 79800 pair trials at p=0.1: mean 7980, sigma = sqrt(79800*0.1*0.9)
        sigma = np.sqrt(79800 * 0.1 * 0.9)
        g = gen_erdos_renyi(400, 0.1, seed=7)
        assert abs(g.num_edges - 7980) <= 5 * sigma

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            gen_erdos_renyi(10, 1.5, seed=0)


class TestBarabasiAlbert:
    def test_single_arrival_attaches_to_all_seeds(self):
        g = gen_barabasi_albert(6, 5, seed=0)
        assert g.num_edges == 5
        assert g.degree[5] == 5

    def test_exact_edge_count(self):
        g = gen_barabasi_albert(400, 5, seed=0)
        assert g.num_edges == (400 - 5) * 5

    @pytest.mark.parametrize("seed", range(20))
    def test_hubs_form(self, seed):
        g = gen_barabasi_albert(400, 5, seed=seed)
        assert g.degree.max() > 4 * 5

    def test_rejects_m_ge_n(self):
        with pytest.raises(ValueError):
            gen_barabasi_albert(5, 5, seed=0)


class TestNewmanWatts:
    def test_ring_lattice_p0(self):
        g = gen_newman_watts(10, 4, 0.0, seed=0)
        assert g.num_edges == 20
        assert np.all(g.degree == 4)

    def test_k5_means_two_per_side(self):
        g = gen_newman_watts(10, 5, 0.0, seed=0)
        assert g.num_edges == 10 * (5 // 2)

    def test_shortcut_count_band(self):
        # 800 lattice edges, each adds a shortcut with p=0.5
        sigma = np.sqrt(800 * 0.5 * 0.5)
        g = gen_newman_watts(400, 5, 0.5, seed=3)
        assert 800 <= g.num_edges
        assert abs(g.num_edges - (800 + 400)) <= 5 * sigma

    def test_rejects_k_ge_n(self):
        with pytest.raises(ValueError):
            gen_newman_watts(5, 5, 0.5, seed=0)


class TestRandomPartition:
    def test_two_disjoint_triangles(self):
        g, blocks = gen_random_partition([3, 3], 1.0, 0.0, seed=0)
        assert set(map(tuple, g.edges.tolist())) == {(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)}
        assert blocks.tolist() == [0, 0, 0, 1, 1, 1]

    def test_default_block_arithmetic(self):
        assert default_partition_sizes(400) == [133, 133, 100, 34]

    def test_within_block_edge_band(self):
        pairs_per_block = 200 * 199 // 2
        mean = 0.25 * 2 * pairs_per_block
        sigma = np.sqrt(2 * pairs_per_block * 0.25 * 0.75)
        g, blocks = gen_random_partition([200, 200], 0.25, 0.01, seed=11)
        same = blocks[g.edges[:, 0]] == blocks[g.edges[:, 1]]
        assert abs(same.sum() - mean) <= 5 * sigma

    def test_rejects_empty_sizes(self):
        with pytest.raises(ValueError):
            gen_random_partition([], 0.5, 0.5, seed=0)


def modularity(g: Graph, assignment: dict[int, int]) -> float:
    two_m = 2.0 * g.num_edges
    a = g.adjacency_dense()
    q = 0.0
    for i in range(g.n):
        for j in range(g.n):
            if assignment[i] == assignment[j]:
                q += a[i, j] - g.degree[i] * g.degree[j] / two_m
    return q / two_m


class TestGreedyModularity:
    def test_two_triangles_contiguous(self):
        g = two_triangles()
        comms = greedy_modularity_communities(g)
        assert sorted(map(sorted, comms)) == [[0, 1, 2], [3, 4, 5]]
        # oracle: that partition beats every other 2-community split
        best = modularity(g, {i: int(i >= 3) for i in range(6)})
        for bits in range(1, 32):  # every bipartition up to label symmetry
            other = modularity(g, {i: (bits >> i) & 1 for i in range(6)})
            assert other <= best + 1e-12

    def test_k5_single_community_identity(self):
        g = gen_erdos_renyi(5, 1.0, seed=0)
        perm = greedy_modularity_reorder(g)
        assert perm.tolist() == [0, 1, 2, 3, 4]

    @pytest.mark.parametrize("seed", range(10))
    def test_recovers_planted_blocks(self, seed):
        g, blocks = gen_random_partition([50, 50], 0.25, 0.01, seed=seed)
        comms = greedy_modularity_communities(g)
        label = np.empty(g.n, dtype=int)
        for cid, members in enumerate(comms):
            label[members] = cid
        same_block = blocks[:, None] == blocks[None, :]
        same_comm = label[:, None] == label[None, :]
        iu = np.triu_indices(g.n, 1)
        together = same_comm[iu][same_block[iu]]
        assert together.mean() >= 0.9

    def test_isolated_nodes_are_singletons(self):
        g = Graph.from_edges(4, [(0, 1)])
        comms = greedy_modularity_communities(g)
        assert sorted(map(sorted, comms)) == [[0, 1], [2], [3]]

    def test_reorder_is_bijection(self):
        for seed in range(5):
            g = gen_erdos_renyi(30, 0.2, seed=seed)
            perm = greedy_modularity_reorder(g)
            assert np.array_equal(np.sort(perm), np.arange(30))


class TestDeterminismAndInvariants:
    @pytest.mark.parametrize("make", [
        lambda s: gen_erdos_renyi(60, 0.1, seed=s),
        lambda s: gen_barabasi_albert(60, 3, seed=s),
        lambda s: gen_newman_watts(60, 4, 0.3, seed=s),
        lambda s: gen_random_partition([20, 20, 20], 0.3, 0.02, seed=s)[0],
    ])
    def test_same_seed_same_edges(self, make):
        a, b = make(42), make(42)
        assert np.array_equal(a.edges, b.edges)
        c = make(43)
        assert not np.array_equal(a.edges, c.edges)

    @pytest.mark.parametrize("g", [
        gen_grid8(5),
        gen_erdos_renyi(50, 0.1, seed=2),
        gen_barabasi_albert(50, 3, seed=2),
        gen_newman_watts(50, 4, 0.3, seed=2),
        gen_random_partition([15, 15, 20], 0.3, 0.02, seed=2)[0],
    ])
    def test_generator_output_validates(self, g):
        g.validate()
        adj = g.adjacency_dense()
        assert np.array_equal(adj, adj.T)
        assert np.all(np.diag(adj) == 0)


class TestEdgelistIO:
    def test_round_trip(self):
        g = gen_erdos_renyi(20, 0.2, seed=5)
        buf = io.StringIO()
        write_edgelist(g, buf, comments=["hello"])
        buf.seek(0)
        back = read_edgelist(buf)
        assert back.n == g.n
        assert np.array_equal(back.edges, g.edges)

    def test_bad_header(self):
        with pytest.raises(FormatError):
            read_edgelist(io.StringIO("nodes=4\n0 1\n"))

    def test_bad_pair_line(self):
        with pytest.raises(FormatError):
            read_edgelist(io.StringIO("n=4\n0 1 2\n"))

    def test_out_of_range_endpoint(self):
        with pytest.raises(FormatError):
            read_edgelist(io.StringIO("n=2\n0 5\n"))
