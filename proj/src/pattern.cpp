#include "accmv/pattern.hpp"

#include "accmv/errors.hpp"

#include <bit>
#include <cmath>

namespace accmv {

namespace {

std::uint32_t mask_for(int length) {
  return length >= 32 ? ~0u : ((1u << length) - 1u);
}

void check_length(int length) {
  if (length < 1 || length > kMaxPatternLength) {
    throw ArgumentError("pattern length " + std::to_string(length) + " outside [1, " +
                        std::to_string(kMaxPatternLength) + "]");
  }
}

}  // namespace

Pattern::Pattern(std::uint32_t bits, int length) : bits_(bits), length_(length) {
  check_length(length);
  if ((bits & ~mask_for(length)) != 0) {
    throw ArgumentError("pattern bits exceed length " + std::to_string(length));
  }
}

Pattern Pattern::parse(std::string_view text) {
  const int length = static_cast<int>(text.size());
  check_length(length);
  std::uint32_t bits = 0;
  for (char c : text) {
    if (c != '0' && c != '1') {
      throw ArgumentError("invalid pattern string '" + std::string(text) + "'");
    }
    bits = (bits << 1) | static_cast<std::uint32_t>(c == '1');
  }
  return {bits, length};
}

Pattern Pattern::complete(int length) {
  check_length(length);
  return {mask_for(length), length};
}

Pattern Pattern::none(int length) { return {0u, length}; }

Pattern Pattern::observed_in(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const int length = static_cast<int>(v.size());
  check_length(length);
  std::uint32_t bits = 0;
  for (int j = 0; j < length; ++j) {
    bits = (bits << 1) | static_cast<std::uint32_t>(!std::isnan(v[j]));
  }
  return {bits, length};
}

bool Pattern::observed(int coord) const {
  if (coord < 0 || coord >= length_) {
    throw ArgumentError("coordinate " + std::to_string(coord) + " outside pattern of length " +
                        std::to_string(length_));
  }
  return ((bits_ >> (length_ - 1 - coord)) & 1u) != 0;
}

int Pattern::count() const noexcept { return std::popcount(bits_); }

bool Pattern::is_complete() const noexcept { return bits_ == mask_for(length_); }

Pattern Pattern::flipped() const noexcept {
  Pattern out = *this;
  out.bits_ = ~bits_ & mask_for(length_);
  return out;
}

std::vector<int> Pattern::coordinates() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count()));
  for (int j = 0; j < length_; ++j) {
    if (observed(j)) out.push_back(j);
  }
  return out;
}

std::string Pattern::to_string() const {
  std::string s(static_cast<std::size_t>(length_), '0');
  for (int j = 0; j < length_; ++j) {
    if (observed(j)) s[static_cast<std::size_t>(j)] = '1';
  }
  return s;
}

std::string PatternPair::to_string() const { return r.to_string() + "|" + a.to_string(); }

PatternPair PatternPair::parse(std::string_view text) {
  const auto bar = text.find('|');
  if (bar == std::string_view::npos) {
    throw ArgumentError("pattern pair must look like 'r|a', got '" + std::string(text) + "'");
  }
  return {Pattern::parse(text.substr(0, bar)), Pattern::parse(text.substr(bar + 1))};
}

bool dominates(const Pattern& lhs, const Pattern& rhs) {
  if (lhs.length() != rhs.length()) {
    throw ArgumentError("cannot compare patterns of length " + std::to_string(lhs.length()) +
                        " and " + std::to_string(rhs.length()));
  }
  return (rhs.bits() & ~lhs.bits()) == 0;
}

std::vector<Pattern> dominated_set(const Pattern& r) {
  // Enumerate bit-subsets of r in ascending order.
  std::vector<Pattern> out;
  out.reserve(std::size_t{1} << r.count());
  const std::uint32_t full = r.bits();
  std::uint32_t sub = 0;
  while (true) {
    out.emplace_back(sub, r.length());
    if (sub == full) break;
    sub = (sub - full) & full;
  }
  return out;
}

Eigen::VectorXd extract(const Eigen::Ref<const Eigen::VectorXd>& v, const Pattern& r) {
  if (v.size() != r.length()) {
    throw ArgumentError("vector of length " + std::to_string(v.size()) +
                        " does not match pattern length " + std::to_string(r.length()));
  }
  Eigen::VectorXd out(r.count());
  int k = 0;
  for (int j = 0; j < r.length(); ++j) {
    if (!r.observed(j)) continue;
    if (std::isnan(v[j])) {
      throw PreconditionError("coordinate " + std::to_string(j) + " requested by pattern " +
                              r.to_string() + " is not observed");
    }
    out[k++] = v[j];
  }
  return out;
}

}  // namespace accmv
