#pragma once

#include <string>
#include <vector>

namespace rflstd {

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Fast invariant checks on small random instances: push-through identity,
/// two-form empirical MSBE, ridge reduction at gamma = 0, kernel closed form vs
/// Monte Carlo, positive definiteness with all states visited, pathwise
/// adjustment, and the scalar delta oracle.
std::vector<SelftestCheck> run_selftest();

}  // namespace rflstd
