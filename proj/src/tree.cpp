#include "treeboot/tree.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace treeboot {

std::uint64_t tree_vertex_count(tree_geometry g, int levels, int branching) {
    const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t total = 1, width = 1;
    for (int k = 1; k <= levels; ++k) {
        const std::uint64_t mult =
            (k == 1 && g == tree_geometry::ball)
                ? std::uint64_t(branching) + 1
                : std::uint64_t(branching);
        if (width > cap / mult) return cap;
        width *= mult;
        if (total > cap - width) return cap;
        total += width;
    }
    return total;
}

tree_topology::tree_topology(const tree_config& cfg,
                             std::uint64_t max_vertices)
    : cfg_(cfg) {
    if (cfg.levels < 1) throw domain_error("tree: levels must be >= 1");
    if (cfg.branching < 1) throw domain_error("tree: branching must be >= 1");
    const std::uint64_t count =
        tree_vertex_count(cfg.geometry, cfg.levels, cfg.branching);
    if (count > max_vertices)
        throw resource_error("tree: " + std::to_string(count) +
                                 " vertices exceed the configured bound of " +
                                 std::to_string(max_vertices),
                             count);
    n_ = std::int64_t(count);
    offset_.resize(std::size_t(cfg.levels) + 2);
    offset_[0] = 0;
    std::int64_t width = 1;
    for (int k = 0; k <= cfg.levels; ++k) {
        offset_[std::size_t(k) + 1] = offset_[std::size_t(k)] + width;
        width *= (k == 0 && cfg.geometry == tree_geometry::ball)
                     ? cfg.branching + 1
                     : cfg.branching;
    }
}

int tree_topology::level_of(std::int64_t v) const {
    auto it = std::upper_bound(offset_.begin(), offset_.end(), v);
    return int(it - offset_.begin()) - 1;
}

std::int64_t tree_topology::interior_end(int margin) const {
    const int cut = cfg_.levels - margin;
    if (cut < 0) return 0;
    if (cut >= cfg_.levels) return n_;
    return offset_[std::size_t(cut) + 1];
}

} // namespace treeboot
