#include <doctest.h>

#include <stdexcept>

#include "blocksim/chaindag.hpp"

using namespace blocksim;

namespace {

// the two-peer example DAG: 1->0, 2->1, 3->1, 4->2
BlockDag example_dag() {
    BlockDag dag;
    dag.add_block(0, 1.1, {0});
    dag.add_block(0, 2.4, {1});
    dag.add_block(1, 4.0, {1});
    dag.add_block(1, 6.2, {2});
    return dag;
}

}  // namespace

TEST_CASE("dag construction and depths") {
    BlockDag dag = example_dag();
    CHECK(dag.size() == 5);
    CHECK(dag.depth(0) == 0);
    CHECK(dag.depth(1) == 1);
    CHECK(dag.depth(2) == 2);
    CHECK(dag.depth(3) == 2);
    CHECK(dag.depth(4) == 3);
    CHECK(dag.max_depth() == 3);
    CHECK(dag.in_refs(1) == std::vector<int>{2, 3});
}

TEST_CASE("add_block validation") {
    BlockDag dag;
    CHECK_THROWS_AS(dag.add_block(0, 1.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(dag.add_block(0, 1.0, {1}), std::invalid_argument);
    CHECK_THROWS_AS(dag.add_block(0, 1.0, {-1}), std::invalid_argument);
}

TEST_CASE("path queries") {
    BlockDag dag = example_dag();
    CHECK(dag.has_path(4, 1));
    CHECK_FALSE(dag.has_path(4, 3));
    CHECK(dag.has_path(2, 2));
    CHECK_FALSE(dag.has_path(0, 1));
    CHECK(dag.has_path(4, 0));
    CHECK_THROWS_AS(dag.has_path(0, 9), std::invalid_argument);
}

TEST_CASE("max in-degree") {
    CHECK(example_dag().max_in_degree() == 2);
    BlockDag chain;
    chain.add_block(0, 1, {0});
    chain.add_block(0, 2, {1});
    CHECK(chain.max_in_degree() == 1);
    CHECK(BlockDag().max_in_degree() == 0);
}

TEST_CASE("peer views stay reference-closed") {
    BlockDag dag = example_dag();
    PeerView v(&dag, 0);
    CHECK(v.contains(0));
    CHECK(v.known_count() == 1);
    CHECK_THROWS_AS(v.add(2), std::logic_error);  // missing reference 1
    v.add(1);
    v.add(2);
    CHECK(v.known_count() == 3);
    v.add(2);  // idempotent
    CHECK(v.known_count() == 3);
    CHECK(v.known_blocks() == std::vector<int>{0, 1, 2});
}

TEST_CASE("longest-chain frontier") {
    BlockDag dag = example_dag();
    PeerView genesis_only(&dag, 0);
    CHECK(longest_chain_frontier(genesis_only) == std::vector<int>{0});

    PeerView q(&dag, 1);
    q.add(1);
    q.add(2);
    q.add(3);
    CHECK(longest_chain_frontier(q) == std::vector<int>{2, 3});

    PeerView chain(&dag, 0);
    chain.add(1);
    chain.add(2);
    chain.add(4);
    CHECK(longest_chain_frontier(chain) == std::vector<int>{4});
}

TEST_CASE("tree policy picks the least-indexed frontier block") {
    BlockDag dag = example_dag();
    PeerView q(&dag, 1);
    q.add(1);
    CHECK(select_refs_tree(q) == std::vector<int>{1});  // block 3's reference
    q.add(2);
    q.add(3);
    CHECK(select_refs_tree(q) == std::vector<int>{2});  // tie {2,3} -> least index

    PeerView fresh(&dag, 0);
    CHECK(select_refs_tree(fresh) == std::vector<int>{0});
}

TEST_CASE("throughput policy references every leaf") {
    BlockDag dag;
    dag.add_block(0, 1, {0});
    dag.add_block(1, 2, {0});
    PeerView v(&dag, 0);
    CHECK(select_refs_throughput(v) == std::vector<int>{0});
    v.add(1);
    v.add(2);
    CHECK(select_refs_throughput(v) == std::vector<int>{1, 2});
    dag.add_block(0, 3, {1, 2});
    v.add(3);
    CHECK(select_refs_throughput(v) == std::vector<int>{3});
}

TEST_CASE("first_missing_from finds the lowest gap") {
    BlockDag dag = example_dag();
    PeerView a(&dag, 0), b(&dag, 1);
    a.add(1);
    a.add(2);
    CHECK(a.first_missing_from(b) == 1);
    b.add(1);
    CHECK(a.first_missing_from(b) == 2);
    CHECK(b.first_missing_from(a) == -1);
}

TEST_CASE("distinguished path with tie-break") {
    BlockDag dag = example_dag();
    CHECK(distinguished_path(dag) == std::vector<int>{4, 2, 1, 0});
    CHECK(distinguished_path(dag, {0, 1, 2, 3}) == std::vector<int>{2, 1, 0});
    CHECK_THROWS_AS(distinguished_path(dag, {0, 2}), std::invalid_argument);

    BlockDag chain;
    chain.add_block(0, 1, {0});
    chain.add_block(0, 2, {1});
    CHECK(distinguished_path(chain) == std::vector<int>{2, 1, 0});
}

TEST_CASE("confirmed blocks at a consistency snapshot") {
    CHECK(confirmed_at_consistency(example_dag()) == std::vector<int>{0, 1, 2, 4});
    BlockDag genesis;
    CHECK(confirmed_at_consistency(genesis) == std::vector<int>{0});
    BlockDag chain;
    chain.add_block(0, 1, {0});
    chain.add_block(0, 2, {1});
    CHECK(confirmed_at_consistency(chain) == std::vector<int>{0, 1, 2});
}

TEST_CASE("maximal paths terminate at genesis") {
    CHECK(all_maximal_paths_end_at_genesis(example_dag()));
}

TEST_CASE("dag text export round-trips") {
    BlockDag dag = example_dag();
    std::string text = dag.export_text();
    BlockDag back = BlockDag::import_text(text);
    CHECK(back.size() == dag.size());
    for (int b = 0; b < dag.size(); ++b) {
        CHECK(back.block(b).miner == dag.block(b).miner);
        CHECK(back.block(b).arrival_time == dag.block(b).arrival_time);
        CHECK(back.block(b).out_refs == dag.block(b).out_refs);
    }
    CHECK_THROWS_AS(BlockDag::import_text("5 0 1.0 0\n"), std::invalid_argument);
}
