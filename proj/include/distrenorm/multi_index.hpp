#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

namespace distrenorm {

// Highest derivative order any jet may carry. Multi-index tables grow like
// C(dim + order, order), so this bounds memory for the product tables.
inline constexpr int kMaxJetOrder = 10;
inline constexpr int kMaxJetDim = 12;

using MultiIndex = std::vector<int>;

// Immutable table of all multi-indices k in N^dim with |k| <= order, in graded
// order (degree first, then lexicographically descending exponents). The
// rank of an index does not depend on `order`, so lower-order tables are
// prefixes of higher-order ones.
class MultiIndexTable {
 public:
  struct ProductTerm {
    std::uint32_t a;
    std::uint32_t b;
    std::uint32_t result;
  };

  // Shared instance; built on first use, thread-safe.
  static const MultiIndexTable& get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t size() const { return degree_.size(); }

  std::span<const std::uint8_t> exponents(std::size_t rank) const {
    return {exponents_.data() + rank * static_cast<std::size_t>(dim_),
            static_cast<std::size_t>(dim_)};
  }
  MultiIndex index(std::size_t rank) const;
  int degree(std::size_t rank) const { return degree_[rank]; }
  // k! = prod_i k_i!
  double factorial(std::size_t rank) const { return factorial_[rank]; }
  // Number of indices of degree <= q.
  std::size_t count_up_to(int q) const { return prefix_[static_cast<std::size_t>(q)]; }

  // Rank of k, or npos when |k| > order or k has the wrong length.
  std::size_t rank(std::span<const int> k) const;
  std::size_t rank(std::span<const std::uint8_t> k) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // All (a, b) with |a| + |b| <= order, sorted by result rank then by a.
  const std::vector<ProductTerm>& product_terms() const;

 private:
  MultiIndexTable(int dim, int order);
  std::uint64_t key(std::span<const std::uint8_t> k) const;
  void build_products() const;

  int dim_;
  int order_;
  std::vector<std::uint8_t> exponents_;
  std::vector<int> degree_;
  std::vector<double> factorial_;
  std::vector<std::size_t> prefix_;
  std::vector<std::uint64_t> sorted_keys_;
  std::vector<std::uint32_t> key_rank_;
  mutable std::once_flag products_once_;
  mutable std::vector<ProductTerm> products_;
};

}  // namespace distrenorm
