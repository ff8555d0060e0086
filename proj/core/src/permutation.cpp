#include "hetlb/permutation.hpp"

#include <algorithm>
#include <numeric>

#include "hetlb/error.hpp"

namespace hetlb {

Permutation::Permutation(std::vector<std::uint32_t> order) : order_(std::move(order)) {
    std::vector<bool> seen(order_.size(), false);
    for (std::uint32_t s : order_) {
        if (s >= order_.size() || seen[s]) throw InvalidArgument("not a permutation");
        seen[s] = true;
    }
}

Permutation Permutation::identity(std::size_t n) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0U);
    return Permutation(std::move(order));
}

std::vector<std::uint32_t> Permutation::inverse() const {
    std::vector<std::uint32_t> inv(order_.size());
    for (std::size_t l = 0; l < order_.size(); ++l) inv[order_[l]] = static_cast<std::uint32_t>(l);
    return inv;
}

std::uint64_t factorial(std::size_t n) {
    if (n > 20) throw CapacityError("factorial overflows 64 bits for n > 20");
    std::uint64_t f = 1;
    for (std::size_t k = 2; k <= n; ++k) f *= k;
    return f;
}

std::uint64_t Permutation::rank() const {
    const std::size_t n = order_.size();
    std::uint64_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t smaller_after = 0;
        for (std::size_t j = i + 1; j < n; ++j) smaller_after += order_[j] < order_[i] ? 1 : 0;
        r += smaller_after * factorial(n - 1 - i);
    }
    return r;
}

Permutation Permutation::unrank(std::uint64_t rank, std::size_t n) {
    if (rank >= factorial(n)) throw InvalidArgument("permutation rank out of range");
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0U);
    std::vector<std::uint32_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t f = factorial(n - 1 - i);
        const auto idx = static_cast<std::size_t>(rank / f);
        rank %= f;
        order.push_back(pool[idx]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    return Permutation(std::move(order));
}

std::string Permutation::to_string() const {
    std::string s;
    for (std::size_t l = 0; l < order_.size(); ++l) {
        if (l) s += ' ';
        s += std::to_string(order_[l] + 1);
    }
    return s;
}

std::vector<Permutation> all_permutations(std::size_t n) {
    std::vector<Permutation> out;
    out.reserve(static_cast<std::size_t>(factorial(n)));
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0U);
    do {
        out.emplace_back(order);
    } while (std::next_permutation(order.begin(), order.end()));
    return out;
}

}  // namespace hetlb
