#include "distrenorm/multi_index.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

#include "distrenorm/errors.hpp"

namespace distrenorm {

namespace {

constexpr std::size_t kMaxProductTerms = 8'000'000;

void enumerate_degree(int dim, int remaining, int pos, std::vector<std::uint8_t>& cur,
                      std::vector<std::uint8_t>& out) {
  if (pos == dim - 1) {
    cur[static_cast<std::size_t>(pos)] = static_cast<std::uint8_t>(remaining);
    out.insert(out.end(), cur.begin(), cur.end());
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[static_cast<std::size_t>(pos)] = static_cast<std::uint8_t>(e);
    enumerate_degree(dim, remaining - e, pos + 1, cur, out);
  }
}

}  // namespace

const MultiIndexTable& MultiIndexTable::get(int dim, int order) {
  if (dim < 1 || dim > kMaxJetDim) throw CapabilityError("jet dimension out of supported range");
  if (order < 0 || order > kMaxJetOrder) throw CapabilityError("jet order out of supported range");
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<MultiIndexTable>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{dim, order}];
  if (!slot) slot.reset(new MultiIndexTable(dim, order));
  return *slot;
}

MultiIndexTable::MultiIndexTable(int dim, int order) : dim_(dim), order_(order) {
  std::vector<std::uint8_t> cur(static_cast<std::size_t>(dim), 0);
  prefix_.assign(static_cast<std::size_t>(order) + 1, 0);
  for (int q = 0; q <= order; ++q) {
    enumerate_degree(dim, q, 0, cur, exponents_);
    prefix_[static_cast<std::size_t>(q)] = exponents_.size() / static_cast<std::size_t>(dim);
  }
  const std::size_t n = exponents_.size() / static_cast<std::size_t>(dim);
  degree_.resize(n);
  factorial_.resize(n);
  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto e = exponents(r);
    int deg = 0;
    double f = 1.0;
    for (auto k : e) {
      deg += k;
      for (int j = 2; j <= k; ++j) f *= j;
    }
    degree_[r] = deg;
    factorial_[r] = f;
    keyed[r] = {key(e), static_cast<std::uint32_t>(r)};
  }
  std::sort(keyed.begin(), keyed.end());
  sorted_keys_.resize(n);
  key_rank_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sorted_keys_[i] = keyed[i].first;
    key_rank_[i] = keyed[i].second;
  }
}

const std::vector<MultiIndexTable::ProductTerm>& MultiIndexTable::product_terms() const {
  std::call_once(products_once_, [this] { build_products(); });
  return products_;
}

void MultiIndexTable::build_products() const {
  const std::size_t n = size();
  const int dim = dim_;
  const int order = order_;
  // Pairs (a, b) with |a| + |b| <= order.
  std::size_t count = 0;
  for (std::size_t a = 0; a < n; ++a) count += prefix_[static_cast<std::size_t>(order - degree_[a])];
  if (count > kMaxProductTerms) throw CapabilityError("jet product table too large");
  products_.reserve(count);
  std::vector<std::uint8_t> sum(static_cast<std::size_t>(dim));
  for (std::size_t a = 0; a < n; ++a) {
    auto ea = exponents(a);
    const std::size_t nb = prefix_[static_cast<std::size_t>(order - degree_[a])];
    for (std::size_t b = 0; b < nb; ++b) {
      auto eb = exponents(b);
      for (int i = 0; i < dim; ++i) sum[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(ea[static_cast<std::size_t>(i)] + eb[static_cast<std::size_t>(i)]);
      products_.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                           static_cast<std::uint32_t>(rank(std::span<const std::uint8_t>(sum)))});
    }
  }
  std::sort(products_.begin(), products_.end(), [](const ProductTerm& x, const ProductTerm& y) {
    return x.result != y.result ? x.result < y.result : x.a < y.a;
  });
}

std::uint64_t MultiIndexTable::key(std::span<const std::uint8_t> k) const {
  std::uint64_t v = 0;
  for (auto e : k) v = (v << 4) | e;
  return v;
}

MultiIndex MultiIndexTable::index(std::size_t r) const {
  auto e = exponents(r);
  return MultiIndex(e.begin(), e.end());
}

std::size_t MultiIndexTable::rank(std::span<const std::uint8_t> k) const {
  if (static_cast<int>(k.size()) != dim_) return npos;
  int deg = 0;
  for (auto e : k) deg += e;
  if (deg > order_) return npos;
  const auto kk = key(k);
  auto it = std::lower_bound(sorted_keys_.begin(), sorted_keys_.end(), kk);
  if (it == sorted_keys_.end() || *it != kk) return npos;
  return key_rank_[static_cast<std::size_t>(it - sorted_keys_.begin())];
}

std::size_t MultiIndexTable::rank(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != dim_) return npos;
  std::vector<std::uint8_t> e(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] < 0 || k[i] > order_) return npos;
    e[i] = static_cast<std::uint8_t>(k[i]);
  }
  return rank(std::span<const std::uint8_t>(e));
}

}  // namespace distrenorm
