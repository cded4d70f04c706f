#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace varbpr::data {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

enum class Format { ml100k_tab, ml1m_doublecolon, generic_implicit_csv };

Format parse_format(std::string_view name);
std::string_view format_name(Format format);

/// Malformed input line. `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Record {
  UserId user = 0;
  ItemId item = 0;
  std::optional<double> rating;
  std::optional<std::int64_t> timestamp;
};

/// Raw interaction records with dense id remapping.
///
/// Dense ids are assigned in order of first appearance. Duplicate
/// (user, item) pairs keep the first occurrence; `duplicates_dropped`
/// counts the rest.
struct InteractionLog {
  std::vector<Record> records;
  std::vector<std::string> user_raw_ids;  // dense -> raw
  std::vector<std::string> item_raw_ids;
  std::size_t duplicates_dropped = 0;

  std::size_t user_count() const noexcept { return user_raw_ids.size(); }
  std::size_t item_count() const noexcept { return item_raw_ids.size(); }
  bool has_ratings() const noexcept;
};

InteractionLog load_ratings(const std::filesystem::path& path, Format format);

/// Writes "raw_id,dense_id" rows for users or items.
void export_remap_csv(const std::vector<std::string>& raw_ids, const std::filesystem::path& path);

/// Per-user train/test item sets. Item lists are sorted and duplicate-free.
struct SplitBundle {
  std::size_t user_count = 0;
  std::size_t item_count = 0;
  std::vector<std::vector<ItemId>> train_positives;
  std::vector<std::vector<ItemId>> test_positives;
  std::size_t dropped_users = 0;

  bool is_train_positive(UserId user, ItemId item) const;
  bool is_test_positive(UserId user, ItemId item) const;
  std::size_t train_size() const;
  std::size_t test_size() const;
  /// Users with at least one training positive.
  std::vector<UserId> active_users() const;
};

/// Holds out floor(half) of each user's items rated >= 4 as a clean test
/// set; every other record becomes an implicit training positive.
SplitBundle split_clean_test(const InteractionLog& log, std::uint64_t seed);

/// Global uniform split of interactions.
SplitBundle split_implicit(const InteractionLog& log, double test_fraction, std::uint64_t seed);

/// Adds floor(rate * train size) false positives drawn uniformly from the
/// (user, item) pairs that are neither train nor test positives.
SplitBundle inject_noise(const SplitBundle& bundle, double rate, std::uint64_t seed);

struct SignalBuffer {
  std::vector<double> popularity;
  std::vector<double> rarity;
  std::vector<std::optional<double>> quality;
  std::vector<bool> long_tail_mask;
  std::vector<std::size_t> train_counts;

  std::size_t item_count() const noexcept { return popularity.size(); }
  bool has_quality() const noexcept;
};

inline constexpr double kLongTailFraction = 0.85;

/// Popularity ln(1+count)/ln(1+max_count) from training counts only; quality
/// sigmoid(mean_rating - global_mean) over rated training records.
SignalBuffer compute_signals(const SplitBundle& bundle, const InteractionLog& log);

}  // namespace varbpr::data
