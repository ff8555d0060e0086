#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hetlb {

/// A permutation eta of the servers {0, ..., n-1}: position l (0-based) holds
/// the server that is the (l+1)-th longest in scaled order.
class Permutation {
public:
    Permutation() = default;
    /// Throws InvalidArgument unless `order` is a bijection on [0, n).
    explicit Permutation(std::vector<std::uint32_t> order);
    static Permutation identity(std::size_t n);

    std::size_t size() const noexcept { return order_.size(); }
    std::uint32_t operator[](std::size_t position) const noexcept { return order_[position]; }
    std::span<const std::uint32_t> order() const noexcept { return order_; }

    /// inverse()[server] is the position of that server.
    std::vector<std::uint32_t> inverse() const;

    /// Lexicographic rank in [0, n!) (Lehmer code).
    std::uint64_t rank() const;
    static Permutation unrank(std::uint64_t rank, std::size_t n);

    /// Space-separated 1-based indices, e.g. "2 1 3".
    std::string to_string() const;

    auto operator<=>(const Permutation&) const = default;

private:
    std::vector<std::uint32_t> order_;
};

std::uint64_t factorial(std::size_t n);

/// All permutations of [0, n) in lexicographic (rank) order.
std::vector<Permutation> all_permutations(std::size_t n);

}  // namespace hetlb
