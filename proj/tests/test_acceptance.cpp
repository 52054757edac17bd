#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "trellis/acceptance.hpp"

#include <cstdlib>
#include <iostream>

using namespace trellis;

// The verification matrix: every criterion runs at its stated scale and
// tolerance and prints one PASS/FAIL line.  TRELLIS_SEED overrides the seed.
TEST_CASE("verification matrix") {
    std::uint64_t seed = 42;
    if (const char* env = std::getenv("TRELLIS_SEED")) seed = std::strtoull(env, nullptr, 10);

    std::vector<CheckResult> results = run_acceptance(seed, &std::cout);
    REQUIRE(results.size() == 10);
    for (const CheckResult& r : results) {
        INFO("criterion ", r.id, " (", r.name, "): ", r.detail);
        CHECK(r.pass);
    }
}
