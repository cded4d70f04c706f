#include "varbpr/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "varbpr/mathcore.hpp"
#include "varbpr/random.hpp"

namespace varbpr::data {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + sep.size();
  }
  return fields;
}

double parse_rating(std::string_view text, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ParseError(line, "bad rating '" + std::string(text) + "'");
  }
  if (value < 0.5 || value > 5.0) throw ParseError(line, "rating out of [0.5, 5]");
  return value;
}

std::int64_t parse_timestamp(std::string_view text, std::size_t line) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "bad timestamp '" + std::string(text) + "'");
  }
  return value;
}

class IdMap {
 public:
  explicit IdMap(std::vector<std::string>& raw) : raw_(raw) {}
  std::uint32_t intern(std::string_view key) {
    auto it = index_.find(std::string(key));
    if (it != index_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(raw_.size());
    raw_.emplace_back(key);
    index_.emplace(std::string(key), id);
    return id;
  }

 private:
  std::vector<std::string>& raw_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

void drop_empty_train_users(SplitBundle& bundle) {
  for (std::size_t u = 0; u < bundle.user_count; ++u) {
    if (bundle.train_positives[u].empty() && !bundle.test_positives[u].empty()) {
      bundle.test_positives[u].clear();
      ++bundle.dropped_users;
    }
  }
}

bool contains(const std::vector<ItemId>& sorted, ItemId item) {
  return std::binary_search(sorted.begin(), sorted.end(), item);
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

Format parse_format(std::string_view name) {
  if (name == "ml100k_tab") return Format::ml100k_tab;
  if (name == "ml1m_doublecolon") return Format::ml1m_doublecolon;
  if (name == "generic_implicit_csv") return Format::generic_implicit_csv;
  throw std::invalid_argument("unknown dataset format '" + std::string(name) + "'");
}

std::string_view format_name(Format format) {
  switch (format) {
    case Format::ml100k_tab: return "ml100k_tab";
    case Format::ml1m_doublecolon: return "ml1m_doublecolon";
    case Format::generic_implicit_csv: return "generic_implicit_csv";
  }
  return "unknown";
}

bool InteractionLog::has_ratings() const noexcept {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(), [](const Record& r) { return r.rating.has_value(); });
}

InteractionLog load_ratings(const std::filesystem::path& path, Format format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  InteractionLog log;
  IdMap users(log.user_raw_ids);
  IdMap items(log.item_raw_ids);
  std::unordered_set<std::uint64_t> seen;

  // Column positions for the CSV header; -1 when absent.
  int rating_col = -1;
  int timestamp_col = -1;
  std::size_t expected_fields = 0;

  std::string line;
  std::size_t line_no = 0;
  bool header_pending = format == Format::generic_implicit_csv;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;

    std::vector<std::string_view> fields;
    switch (format) {
      case Format::ml100k_tab: fields = split(view, "\t"); break;
      case Format::ml1m_doublecolon: fields = split(view, "::"); break;
      case Format::generic_implicit_csv: fields = split(view, ","); break;
    }

    if (header_pending) {
      header_pending = false;
      if (fields.size() < 2 || fields[0] != "user" || fields[1] != "item") {
        throw ParseError(line_no, "expected header 'user,item[,rating][,timestamp]'");
      }
      for (std::size_t k = 2; k < fields.size(); ++k) {
        if (fields[k] == "rating" && rating_col < 0) {
          rating_col = static_cast<int>(k);
        } else if (fields[k] == "timestamp" && timestamp_col < 0) {
          timestamp_col = static_cast<int>(k);
        } else {
          throw ParseError(line_no, "unexpected header column '" + std::string(fields[k]) + "'");
        }
      }
      expected_fields = fields.size();
      continue;
    }

    Record record;
    if (format == Format::generic_implicit_csv) {
      if (fields.size() != expected_fields) throw ParseError(line_no, "wrong field count");
      if (rating_col >= 0) record.rating = parse_rating(fields[rating_col], line_no);
      if (timestamp_col >= 0) record.timestamp = parse_timestamp(fields[timestamp_col], line_no);
    } else {
      if (fields.size() != 4) throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
      record.rating = parse_rating(fields[2], line_no);
      record.timestamp = parse_timestamp(fields[3], line_no);
    }
    if (fields[0].empty() || fields[1].empty()) throw ParseError(line_no, "empty user or item id");

    record.user = users.intern(fields[0]);
    record.item = items.intern(fields[1]);
    const std::uint64_t key = (std::uint64_t{record.user} << 32) | record.item;
    if (!seen.insert(key).second) {
      ++log.duplicates_dropped;
      continue;
    }
    log.records.push_back(record);
  }
  if (header_pending || log.records.empty()) {
    throw std::domain_error("no interaction records in " + path.string());
  }
  return log;
}

void export_remap_csv(const std::vector<std::string>& raw_ids, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "raw_id,dense_id\n";
  for (std::size_t k = 0; k < raw_ids.size(); ++k) out << raw_ids[k] << ',' << k << '\n';
}

bool SplitBundle::is_train_positive(UserId user, ItemId item) const {
  return contains(train_positives.at(user), item);
}

bool SplitBundle::is_test_positive(UserId user, ItemId item) const {
  return contains(test_positives.at(user), item);
}

std::size_t SplitBundle::train_size() const {
  std::size_t n = 0;
  for (const auto& items : train_positives) n += items.size();
  return n;
}

std::size_t SplitBundle::test_size() const {
  std::size_t n = 0;
  for (const auto& items : test_positives) n += items.size();
  return n;
}

std::vector<UserId> SplitBundle::active_users() const {
  std::vector<UserId> users;
  for (std::size_t u = 0; u < user_count; ++u) {
    if (!train_positives[u].empty()) users.push_back(static_cast<UserId>(u));
  }
  return users;
}

SplitBundle split_clean_test(const InteractionLog& log, std::uint64_t seed) {
  if (!log.has_ratings()) throw std::domain_error("split_clean_test: ratings required");

  SplitBundle bundle;
  bundle.user_count = log.user_count();
  bundle.item_count = log.item_count();
  bundle.train_positives.resize(bundle.user_count);
  bundle.test_positives.resize(bundle.user_count);

  // Per-user record lists in file order keep the split independent of hashing.
  std::vector<std::vector<const Record*>> by_user(bundle.user_count);
  for (const auto& r : log.records) by_user[r.user].push_back(&r);

  Rng rng(seed);
  for (std::size_t u = 0; u < bundle.user_count; ++u) {
    std::vector<ItemId> liked;
    for (const Record* r : by_user[u]) {
      if (*r->rating >= 4.0) liked.push_back(r->item);
    }
    shuffle(std::span<ItemId>(liked), rng);
    liked.resize(liked.size() / 2);
    std::sort(liked.begin(), liked.end());
    for (const Record* r : by_user[u]) {
      if (!contains(liked, r->item)) bundle.train_positives[u].push_back(r->item);
    }
    std::sort(bundle.train_positives[u].begin(), bundle.train_positives[u].end());
    bundle.test_positives[u] = std::move(liked);
  }
  drop_empty_train_users(bundle);
  return bundle;
}

SplitBundle split_implicit(const InteractionLog& log, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::domain_error("split_implicit: test_fraction must lie in (0, 1)");
  }
  SplitBundle bundle;
  bundle.user_count = log.user_count();
  bundle.item_count = log.item_count();
  bundle.train_positives.resize(bundle.user_count);
  bundle.test_positives.resize(bundle.user_count);

  std::vector<std::size_t> order(log.records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(order.size())));
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Record& r = log.records[order[k]];
    (k < n_test ? bundle.test_positives : bundle.train_positives)[r.user].push_back(r.item);
  }
  for (std::size_t u = 0; u < bundle.user_count; ++u) {
    std::sort(bundle.train_positives[u].begin(), bundle.train_positives[u].end());
    std::sort(bundle.test_positives[u].begin(), bundle.test_positives[u].end());
  }
  drop_empty_train_users(bundle);
  return bundle;
}

SplitBundle inject_noise(const SplitBundle& bundle, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::domain_error("inject_noise: rate must lie in [0, 1)");
  SplitBundle noisy = bundle;
  const auto target = static_cast<std::size_t>(std::floor(rate * static_cast<double>(bundle.train_size())));
  if (target == 0) return noisy;

  const auto users = bundle.active_users();
  if (users.empty()) throw std::domain_error("inject_noise: no active users");

  // Rejection from the uniform (user, item) grid is uniform over eligible pairs.
  std::vector<std::vector<ItemId>> added(bundle.user_count);
  const std::size_t max_attempts = 1000 * target + 100000;
  Rng rng(seed);
  std::size_t injected = 0;
  std::size_t attempts = 0;
  while (injected < target) {
    if (++attempts > max_attempts) {
      throw std::runtime_error("inject_noise: could not find enough eligible (user, item) pairs");
    }
    const UserId u = users[uniform_index(rng, users.size())];
    const auto item = static_cast<ItemId>(uniform_index(rng, bundle.item_count));
    if (bundle.is_train_positive(u, item) || bundle.is_test_positive(u, item)) continue;
    auto& extra = added[u];
    if (std::find(extra.begin(), extra.end(), item) != extra.end()) continue;
    extra.push_back(item);
    ++injected;
  }
  for (std::size_t u = 0; u < bundle.user_count; ++u) {
    if (added[u].empty()) continue;
    auto& train = noisy.train_positives[u];
    train.insert(train.end(), added[u].begin(), added[u].end());
    std::sort(train.begin(), train.end());
  }
  return noisy;
}

bool SignalBuffer::has_quality() const noexcept {
  return std::any_of(quality.begin(), quality.end(), [](const auto& q) { return q.has_value(); });
}

SignalBuffer compute_signals(const SplitBundle& bundle, const InteractionLog& log) {
  const std::size_t n_items = bundle.item_count;
  SignalBuffer signals;
  signals.train_counts.assign(n_items, 0);
  for (const auto& items : bundle.train_positives) {
    for (ItemId i : items) ++signals.train_counts.at(i);
  }
  const std::size_t max_count = n_items == 0 ? 0 : *std::max_element(signals.train_counts.begin(), signals.train_counts.end());
  const double denom = std::log1p(static_cast<double>(max_count));

  signals.popularity.resize(n_items);
  signals.rarity.resize(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    const double pop = denom > 0.0 ? std::log1p(static_cast<double>(signals.train_counts[i])) / denom : 0.0;
    signals.popularity[i] = pop;
    signals.rarity[i] = 1.0 - pop;
  }

  // Quality from ratings on training records only.
  signals.quality.assign(n_items, std::nullopt);
  std::vector<double> sum(n_items, 0.0);
  std::vector<std::size_t> n(n_items, 0);
  double global_sum = 0.0;
  std::size_t global_n = 0;
  for (const auto& r : log.records) {
    if (!r.rating || r.user >= bundle.user_count || r.item >= n_items) continue;
    if (!bundle.is_train_positive(r.user, r.item)) continue;
    sum[r.item] += *r.rating;
    ++n[r.item];
    global_sum += *r.rating;
    ++global_n;
  }
  if (global_n > 0) {
    const double global_mean = global_sum / static_cast<double>(global_n);
    for (std::size_t i = 0; i < n_items; ++i) {
      if (n[i] > 0) signals.quality[i] = math::sigmoid(sum[i] / static_cast<double>(n[i]) - global_mean);
    }
  }

  // Long tail: bottom ceil(85%) by (count, id).
  std::vector<ItemId> order(n_items);
  std::iota(order.begin(), order.end(), ItemId{0});
  std::sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
    if (signals.train_counts[a] != signals.train_counts[b]) return signals.train_counts[a] < signals.train_counts[b];
    return a < b;
  });
  const auto tail = static_cast<std::size_t>(std::ceil(kLongTailFraction * static_cast<double>(n_items) - 1e-9));
  signals.long_tail_mask.assign(n_items, false);
  for (std::size_t k = 0; k < tail && k < n_items; ++k) signals.long_tail_mask[order[k]] = true;
  return signals;
}

}  // namespace varbpr::data
