#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "nbs/errors.hpp"
#include "nbs/graph.hpp"
#include "nbs/nb_matrix.hpp"

#include <Eigen/Dense>

namespace nbs {

/// Block description of the operator after one node is attached to the host.
///
/// The extended operator, written over [host edges | new edges], is
///
///     [ B  D ]
///     [ E  F ]
///
/// where the 2d new oriented edges are ordered [k -> c for k in attach,
/// ascending] followed by [c -> k, ascending]. D continues a hop out of the
/// new node into the host, E feeds a host edge into the new node, and F turns
/// around inside the new node without backtracking. The products D*E and F*F
/// vanish identically, so every walk through the new node is captured by
/// X = D*F*E, the length-3 detour matrix.
struct AdditionBlocks {
    AdditionBlocks(Graph h, Graph ext) : host(std::move(h)), extended(std::move(ext)) {}

    Graph host;
    Graph extended;
    std::vector<int> attach;  // sorted host nodes adjacent to the new node
    int new_node = 0;         // label of the added node in `extended`

    Eigen::MatrixXd d_block;  // 2m x 2d
    Eigen::MatrixXd e_block;  // 2d x 2m
    Eigen::MatrixXd f_block;  // 2d x 2d
    Eigen::MatrixXd x;        // 2m x 2m, equals d_block * f_block * e_block

    // Oriented-edge index maps into `extended`: host edge e keeps its
    // endpoints, new edge j follows the block ordering above.
    std::vector<int> host_edge_in_extended;
    std::vector<int> new_edge_in_extended;

    int degree() const { return static_cast<int>(attach.size()); }
};

/// Builds the block decomposition for attaching one new node to every node
/// in `attach`. The attachment set must be nonempty, duplicate-free, and
/// within the host's node range.
inline AdditionBlocks make_addition(const Graph& host, std::vector<int> attach) {
    std::sort(attach.begin(), attach.end());
    if (attach.empty()) throw PreconditionError("make_addition: empty attachment set");
    if (std::adjacent_find(attach.begin(), attach.end()) != attach.end())
        throw PreconditionError("make_addition: duplicate attachment node");
    if (attach.front() < 0 || attach.back() >= host.num_nodes())
        throw PreconditionError("make_addition: attachment node out of range");

    const int new_node = host.num_nodes();
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    for (auto [u, v] : host.undirected_edges()) edges.emplace_back(u, v);
    for (int k : attach) edges.emplace_back(k, new_node);

    AdditionBlocks out(host, Graph::from_edges(edges));
    out.attach = attach;
    out.new_node = new_node;

    const int two_m = host.num_oriented();
    const int d = static_cast<int>(attach.size());

    out.host_edge_in_extended.resize(two_m);
    for (int e = 0; e < two_m; ++e) {
        OrientedEdge oe = host.edge(e);
        out.host_edge_in_extended[e] = out.extended.edge_index(oe.src, oe.tgt);
    }
    out.new_edge_in_extended.resize(2 * d);
    for (int j = 0; j < d; ++j) {
        out.new_edge_in_extended[j] = out.extended.edge_index(attach[j], out.new_node);
        out.new_edge_in_extended[d + j] = out.extended.edge_index(out.new_node, attach[j]);
    }

    out.d_block = Eigen::MatrixXd::Zero(two_m, 2 * d);
    out.e_block = Eigen::MatrixXd::Zero(2 * d, two_m);
    out.f_block = Eigen::MatrixXd::Zero(2 * d, 2 * d);

    for (int j = 0; j < d; ++j) {
        const int node = attach[j];
        for (int e = 0; e < two_m; ++e) {
            OrientedEdge oe = host.edge(e);
            // c -> node followed by node -> l: every host edge out of node
            // qualifies, since none of them can return to c.
            if (oe.src == node) out.d_block(e, d + j) = 1.0;
            // i -> node followed by node -> c.
            if (oe.tgt == node) out.e_block(j, e) = 1.0;
        }
        // i -> c followed by c -> k needs k != i.
        for (int i = 0; i < d; ++i)
            if (i != j) out.f_block(d + j, i) = 1.0;
    }

    out.x = out.d_block * out.f_block * out.e_block;
    return out;
}

/// Assembles the extended operator from the four blocks, in block ordering.
/// Useful for asserting that the blocks agree with the operator built
/// directly from the extended graph.
inline Eigen::MatrixXd blocks_assembled(const AdditionBlocks& ab) {
    const int two_m = ab.host.num_oriented();
    const int two_d = 2 * ab.degree();
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(two_m + two_d, two_m + two_d);
    big.topLeftCorner(two_m, two_m) = NBOperator(ab.host).dense();
    big.topRightCorner(two_m, two_d) = ab.d_block;
    big.bottomLeftCorner(two_d, two_m) = ab.e_block;
    big.bottomRightCorner(two_d, two_d) = ab.f_block;
    return big;
}

/// Permutation taking block ordering [host edges | new edges] to the
/// extended graph's own oriented-edge ordering.
inline std::vector<int> block_to_extended(const AdditionBlocks& ab) {
    std::vector<int> perm = ab.host_edge_in_extended;
    perm.insert(perm.end(), ab.new_edge_in_extended.begin(), ab.new_edge_in_extended.end());
    return perm;
}

}  // namespace nbs
