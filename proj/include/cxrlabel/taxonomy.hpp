#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Two-level label space: 14 finding-level (secondary) labels, each owned by
// one of 7 primary labels (5 body parts, "normal" and "device").
namespace cxrlabel::taxonomy {

inline constexpr std::size_t kSecondaryCount = 14;
inline constexpr std::size_t kPrimaryCount = 7;
inline constexpr std::size_t kBodyPartCount = 5;

/// Fixed-arity boolean vector indexed in schema order.
template <std::size_t N>
struct LabelVector {
  std::array<bool, N> values{};

  static constexpr std::size_t size() { return N; }
  bool& operator[](std::size_t i) { return values[i]; }
  bool operator[](std::size_t i) const { return values[i]; }
  std::size_t count() const {
    std::size_t n = 0;
    for (bool v : values) n += v ? 1 : 0;
    return n;
  }
  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

using SecondaryLabelVector = LabelVector<kSecondaryCount>;
using PrimaryLabelVector = LabelVector<kPrimaryCount>;

/// Immutable after construction; all invariants are checked by parse().
class LabelSchema {
 public:
  /// Throws Error{input, "taxonomy", "schema-parse"} on malformed lines and
  /// Error{input, "taxonomy", "schema-invalid"} naming the broken rule.
  static LabelSchema parse(std::string_view text);
  static LabelSchema load(const std::filesystem::path& path);
  /// The shipped hierarchy (identical to data/schema.txt).
  static const LabelSchema& builtin();

  /// Canonical text form; parse(serialize()) == *this and a canonical file
  /// round-trips byte-identically.
  std::string serialize() const;

  const std::vector<std::string>& secondary_labels() const { return secondary_; }
  const std::vector<std::string>& primary_labels() const { return primary_; }

  std::optional<std::size_t> secondary_index(std::string_view name) const;
  std::optional<std::size_t> primary_index(std::string_view name) const;

  /// Primary index owning secondary `i`; nullopt only for normal_secondary.
  std::optional<std::size_t> parent_of(std::size_t secondary) const {
    return parent_[secondary];
  }

  std::size_t normal_secondary() const { return normal_secondary_; }
  std::size_t normal_primary() const { return normal_primary_; }
  std::size_t device_primary() const { return device_primary_; }
  bool is_device(std::size_t secondary) const { return device_[secondary]; }
  /// A secondary label that is neither the normal label nor a device.
  bool is_disease(std::size_t secondary) const {
    return secondary != normal_secondary_ && !device_[secondary];
  }
  bool is_body_part(std::size_t primary) const {
    return primary != normal_primary_ && primary != device_primary_;
  }

  friend bool operator==(const LabelSchema&, const LabelSchema&) = default;

 private:
  LabelSchema() = default;
  void validate() const;

  std::vector<std::string> secondary_;
  std::vector<std::string> primary_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<bool> device_;
  std::size_t normal_secondary_ = 0;
  std::size_t normal_primary_ = 0;
  std::size_t device_primary_ = 0;
};

/// Primary p (body part) is positive iff one of its children is; the device
/// primary iff any device secondary is; normal iff no body part is positive.
PrimaryLabelVector propagate(const LabelSchema& schema,
                             const SecondaryLabelVector& secondary);

/// Makes the normal label the complement of "any disease positive". Device
/// labels do not count as diseases. Idempotent.
SecondaryLabelVector enforce_exclusion(const LabelSchema& schema,
                                       SecondaryLabelVector secondary);

/// Names of the positive labels, in schema order.
std::vector<std::string> positive_names(const LabelSchema& schema,
                                        const SecondaryLabelVector& v);

}  // namespace cxrlabel::taxonomy
