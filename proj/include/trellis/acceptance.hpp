#pragma once

#include "trellis/value.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace trellis {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

/// The full verification matrix.  Criteria 1..9 run twice so that criterion
/// 10 can compare the two report documents byte for byte.  `progress`, when
/// given, receives one "PASS criterion N: name" / "FAIL ..." line each.
std::vector<CheckResult> run_acceptance(std::uint64_t seed, std::ostream* progress = nullptr);

/// Machine-readable report for one pass over criteria 1..9.
Value acceptance_report(const std::vector<CheckResult>& results, std::uint64_t seed);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace trellis
