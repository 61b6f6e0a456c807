#pragma once

#include <cstdint>
#include <vector>

#include "treeboot/errors.hpp"

namespace treeboot {

enum class tree_geometry {
    rooted, // root with b children, every interior vertex b children
    ball    // root with b+1 children: the radius-L ball of the (b+1)-regular tree
};

enum class boundary_mode {
    frozen,  // deepest level keeps its initial state forever
    occupied // deepest level forced occupied at t = 0
};

struct tree_config {
    tree_geometry geometry = tree_geometry::rooted;
    int levels = 1; // depth (rooted) or radius (ball)
    int branching = 2;
    boundary_mode boundary = boundary_mode::frozen;
};

/// Saturating vertex count for the requested geometry.
std::uint64_t tree_vertex_count(tree_geometry g, int levels, int branching);

/// BFS-indexed finite tree with O(1) arithmetic parent/children. Vertices
/// are numbered level by level; children of a vertex are contiguous.
class tree_topology {
public:
    tree_topology(const tree_config& cfg, std::uint64_t max_vertices);

    std::int64_t vertex_count() const { return n_; }
    int levels() const { return cfg_.levels; }
    int branching() const { return cfg_.branching; }
    tree_geometry geometry() const { return cfg_.geometry; }
    const tree_config& config() const { return cfg_; }

    std::int64_t level_begin(int k) const { return offset_[k]; }
    std::int64_t level_end(int k) const { return offset_[k + 1]; }
    std::int64_t leaf_begin() const { return offset_[cfg_.levels]; }
    bool is_leaf(std::int64_t v) const { return v >= leaf_begin(); }

    std::int64_t parent(std::int64_t v) const {
        if (v == 0) return -1;
        if (cfg_.geometry == tree_geometry::rooted)
            return (v - 1) / cfg_.branching;
        if (v <= cfg_.branching + 1) return 0;
        return (v - 2) / cfg_.branching;
    }

    /// [first, last) indices of the children; empty for leaves.
    std::pair<std::int64_t, std::int64_t> children(std::int64_t v) const {
        if (is_leaf(v)) return {0, 0};
        const std::int64_t b = cfg_.branching;
        if (cfg_.geometry == tree_geometry::rooted)
            return {b * v + 1, b * v + 1 + b};
        if (v == 0) return {1, b + 2};
        return {b * v + 2, b * v + 2 + b};
    }

    int level_of(std::int64_t v) const; // binary search over level offsets

    /// Vertices at graph distance >= margin from the deepest level form the
    /// prefix [0, interior_end(margin)).
    std::int64_t interior_end(int margin) const;

private:
    tree_config cfg_;
    std::int64_t n_;
    std::vector<std::int64_t> offset_; // size levels + 2
};

} // namespace treeboot
