#pragma once

#include <stdexcept>
#include <string>

namespace treeboot {

/// Argument outside its mathematical domain (probabilities, ranges, ...).
class domain_error : public std::domain_error {
public:
    explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

/// Parameters for which the requested critical structure does not exist
/// (theta in {1, b}, b <= theta, or a drift without an interior minimum).
class degenerate_error : public domain_error {
public:
    explicit degenerate_error(const std::string& what) : domain_error(what) {}
};

/// A hitting target that the dynamics never reaches in finite time.
class unreachable_error : public domain_error {
public:
    explicit unreachable_error(const std::string& what) : domain_error(what) {}
};

/// Requested system size exceeds the configured memory bound.
class resource_error : public std::runtime_error {
public:
    resource_error(const std::string& what, unsigned long long vertex_count)
        : std::runtime_error(what), vertices(vertex_count) {}
    unsigned long long vertices;
};

/// A solver failed to converge or a bracket could not be established.
class numerics_error : public std::runtime_error {
public:
    explicit numerics_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace treeboot
