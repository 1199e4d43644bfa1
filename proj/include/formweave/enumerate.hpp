#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <formweave/configuration.hpp>

namespace formweave {

class EnumerationLimit : public Error {
public:
    using Error::Error;
};

struct EnumerateOptions {
    int clone_bound = 2;
    std::size_t ceiling = 100000;
};

/// Every structural configuration of `family` that satisfies cardinalities,
/// group cardinalities and cross-tree constraints, in a deterministic order.
/// Clone counts range over [min, min(max, clone_bound)] (never below min).
/// Attribute values are not enumerated.
///
/// This is a brute-force generate-and-filter enumeration that shares no code
/// with propagation or check_constraints; tests use it as their oracle.
/// Throws EnumerationLimit when the count would exceed the ceiling.
std::vector<ApplicationFeatureModel> enumerate_configurations(std::shared_ptr<const FeatureModel> family,
                                                              const EnumerateOptions& options = {});

} // namespace formweave
