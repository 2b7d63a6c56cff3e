#ifndef ACCMV_PATTERN_HPP
#define ACCMV_PATTERN_HPP

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace accmv {

inline constexpr int kMaxPatternLength = 16;

/// Response pattern over a fixed number of coordinates.
///
/// Coordinate 0 is the leftmost character of the string form and the most
/// significant bit of `bits()`, so "1010" has value 10 and observes
/// coordinates 0 and 2.
class Pattern {
 public:
  Pattern() = default;
  Pattern(std::uint32_t bits, int length);

  static Pattern parse(std::string_view text);
  static Pattern complete(int length);
  static Pattern none(int length);
  /// Pattern of the non-NaN entries of `v`.
  static Pattern observed_in(const Eigen::Ref<const Eigen::VectorXd>& v);

  [[nodiscard]] std::uint32_t bits() const noexcept { return bits_; }
  [[nodiscard]] int length() const noexcept { return length_; }
  [[nodiscard]] bool observed(int coord) const;
  [[nodiscard]] int count() const noexcept;
  [[nodiscard]] bool is_complete() const noexcept;
  [[nodiscard]] Pattern flipped() const noexcept;
  /// Indices of observed coordinates in ascending coordinate order.
  [[nodiscard]] std::vector<int> coordinates() const;
  [[nodiscard]] std::string to_string() const;

  auto operator<=>(const Pattern&) const = default;

 private:
  std::uint32_t bits_ = 0;
  int length_ = 1;
};

/// Stratum label (R = r, A = a).
struct PatternPair {
  Pattern r;
  Pattern a;

  [[nodiscard]] std::string to_string() const;
  static PatternPair parse(std::string_view text);  // "r|a"

  auto operator<=>(const PatternPair&) const = default;
};

/// True iff lhs[i] >= rhs[i] for every coordinate.
[[nodiscard]] bool dominates(const Pattern& lhs, const Pattern& rhs);

/// All tau <= r in ascending binary value.
[[nodiscard]] std::vector<Pattern> dominated_set(const Pattern& r);

/// Subvector of `v` at the coordinates observed under `r`. Throws
/// PreconditionError if any of those coordinates is NaN in `v`.
[[nodiscard]] Eigen::VectorXd extract(const Eigen::Ref<const Eigen::VectorXd>& v, const Pattern& r);

}  // namespace accmv

#endif  // ACCMV_PATTERN_HPP
