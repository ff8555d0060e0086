#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "hetlb/error.hpp"
#include "hetlb/permutation.hpp"

using namespace hetlb;

TEST_SUITE("permutation") {
    TEST_CASE("rank and unrank are inverse and follow lexicographic order") {
        for (std::size_t n = 1; n <= 6; ++n) {
            std::vector<std::uint32_t> p(n);
            std::iota(p.begin(), p.end(), 0U);
            std::uint64_t expected = 0;
            do {
                const Permutation perm(p);
                CHECK(perm.rank() == expected);
                CHECK(Permutation::unrank(expected, n) == perm);
                ++expected;
            } while (std::next_permutation(p.begin(), p.end()));
            CHECK(expected == factorial(n));
            const auto all = all_permutations(n);
            CHECK(all.size() == factorial(n));
            CHECK(std::is_sorted(all.begin(), all.end()));
        }
    }

    TEST_CASE("inverse and printing") {
        const Permutation p({2, 0, 1});
        CHECK(p.inverse() == std::vector<std::uint32_t>{1, 2, 0});
        CHECK(p.to_string() == "3 1 2");
        CHECK(Permutation::identity(3).to_string() == "1 2 3");
    }

    TEST_CASE("invalid input is rejected") {
        CHECK_THROWS_AS(Permutation({0, 0, 1}), InvalidArgument);
        CHECK_THROWS_AS(Permutation({0, 3}), InvalidArgument);
        CHECK_THROWS_AS(factorial(21), CapacityError);
        CHECK(factorial(20) == 2432902008176640000ULL);
    }
}
