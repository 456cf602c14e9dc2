#include "qoe/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "qoe/demographics.hpp"
#include "qoe/error.hpp"
#include "qoe/rng.hpp"

namespace qoe {

namespace {

enum Slot : std::size_t {
  kSessionId,
  kContentType,
  kDevice,
  kEncodingProfile,
  kDuration,
  kBitrateMean,
  kBitrateStd,
  kVmafMean,
  kVmafStd,
  kSsimMean,
  kQpMean,
  kStallDuration,
  kStallCount,
  kMos,
  kFixedSlots,
  kDemographicSlot = kFixedSlots,
  kBaseSessionSlot,
  kFirstExtraSlot,
};

const std::vector<ColumnSpec> kSessionColumns = {
    {"session_id", ColumnKind::meta},
    {"content_type", ColumnKind::categorical},
    {"device", ColumnKind::categorical},
    {"encoding_profile", ColumnKind::categorical},
    {"duration_s", ColumnKind::numeric},
    {"bitrate_mean_kbps", ColumnKind::numeric},
    {"bitrate_std_kbps", ColumnKind::numeric},
    {"vmaf_mean", ColumnKind::numeric},
    {"vmaf_std", ColumnKind::numeric},
    {"ssim_mean", ColumnKind::numeric},
    {"qp_mean", ColumnKind::numeric},
    {"stall_duration_s", ColumnKind::numeric},
    {"stall_count", ColumnKind::numeric},
    {"mos", ColumnKind::target},
};

std::optional<std::size_t> fixed_slot(std::string_view name) {
  for (std::size_t i = 0; i < kSessionColumns.size(); ++i)
    if (kSessionColumns[i].name == name) return i;
  if (name == kDemographicColumn) return kDemographicSlot;
  if (name == kBaseSessionColumn) return kBaseSessionSlot;
  return std::nullopt;
}

// Maps each schema position to a storage slot; extra meta columns get
// kFirstExtraSlot + their ordinal among extras.
std::vector<std::size_t> slot_map(const std::vector<ColumnSpec>& schema) {
  std::vector<std::size_t> slots;
  slots.reserve(schema.size());
  std::size_t extra = 0;
  for (const auto& col : schema) {
    if (auto s = fixed_slot(col.name))
      slots.push_back(*s);
    else
      slots.push_back(kFirstExtraSlot + extra++);
  }
  return slots;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_int(std::int64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void append_field(std::string& out, std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    out.append(field);
    return;
  }
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

std::string cell_text(const Record& r, std::size_t slot) {
  const auto& s = r.session;
  switch (slot) {
    case kSessionId: return format_int(s.session_id);
    case kContentType: return s.content_type;
    case kDevice: return s.device;
    case kEncodingProfile: return s.encoding_profile;
    case kDuration: return format_double(s.duration_s);
    case kBitrateMean: return format_double(s.bitrate_mean_kbps);
    case kBitrateStd: return format_double(s.bitrate_std_kbps);
    case kVmafMean: return format_double(s.vmaf_mean);
    case kVmafStd: return format_double(s.vmaf_std);
    case kSsimMean: return format_double(s.ssim_mean);
    case kQpMean: return format_double(s.qp_mean);
    case kStallDuration: return format_double(s.stall_duration_s);
    case kStallCount: return format_int(s.stall_count);
    case kMos: return format_double(s.mos);
    case kDemographicSlot: return r.demographic.value_or("");
    case kBaseSessionSlot: return format_int(r.base_session_id.value_or(0));
    default: return r.extra.at(slot - kFirstExtraSlot);
  }
}

// RFC 4180-style record splitter. Returns rows of fields.
std::vector<std::vector<std::string>> split_csv(std::string_view text, std::string_view origin) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started)
          fail(ErrorKind::parse, std::string(origin) + ": stray quote on line " +
                                     std::to_string(line));
        in_quotes = true;
        field_started = true;
        break;
      case ',': end_field(); break;
      case '\r': break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes)
    fail(ErrorKind::parse, std::string(origin) + ": unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

template <typename T>
T parse_number(const std::string& cell, std::size_t row, std::string_view column) {
  T value{};
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, last, value);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last)
    fail(ErrorKind::parse, "row " + std::to_string(row) + ", column '" + std::string(column) +
                               "': cannot parse '" + cell + "' as a number");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value))
      fail(ErrorKind::parse, "row " + std::to_string(row) + ", column '" +
                                 std::string(column) + "': non-finite value '" + cell + "'");
  }
  return value;
}

void validate_schema(const std::vector<ColumnSpec>& schema) {
  std::unordered_set<std::string> seen;
  std::size_t targets = 0;
  std::size_t next_fixed = 0;
  bool demo = false, base = false;
  for (const auto& col : schema) {
    if (!seen.insert(col.name).second)
      fail(ErrorKind::schema_mismatch, "duplicate column '" + col.name + "'");
    if (col.kind == ColumnKind::target) ++targets;
    auto slot = fixed_slot(col.name);
    if (!slot) {
      if (col.kind != ColumnKind::meta)
        fail(ErrorKind::schema_mismatch, "extra column '" + col.name + "' must be meta");
      continue;
    }
    if (*slot < kFixedSlots) {
      if (*slot != next_fixed)
        fail(ErrorKind::schema_mismatch,
             "column '" + col.name + "' out of order; expected '" +
                 kSessionColumns[next_fixed].name + "'");
      if (col.kind != kSessionColumns[*slot].kind)
        fail(ErrorKind::schema_mismatch, "column '" + col.name + "' has wrong kind");
      ++next_fixed;
    } else if (*slot == kDemographicSlot) {
      demo = true;
    } else {
      base = true;
    }
  }
  if (next_fixed != kFixedSlots) {
    std::string missing;
    for (std::size_t i = next_fixed; i < kFixedSlots; ++i)
      missing += (missing.empty() ? "" : ", ") + kSessionColumns[i].name;
    fail(ErrorKind::schema_mismatch, "missing required columns: " + missing);
  }
  if (targets != 1)
    fail(ErrorKind::schema_mismatch, "schema must have exactly one target column");
  if (demo != base)
    fail(ErrorKind::schema_mismatch,
         "'demographic' and 'base_session_id' must appear together");
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::target: return "target";
    case ColumnKind::group: return "group";
    case ColumnKind::meta: return "meta";
  }
  return "unknown";
}

std::string_view to_string(DataSource source) {
  switch (source) {
    case DataSource::synthetic: return "synthetic";
    case DataSource::ingested: return "ingested";
    case DataSource::augmented: return "augmented";
  }
  return "unknown";
}

const std::vector<ColumnSpec>& session_columns() { return kSessionColumns; }

std::vector<std::string> session_violations(const StreamingSession& s) {
  std::vector<std::string> out;
  auto check = [&](bool ok, std::string msg) {
    if (!ok) out.push_back(std::move(msg));
  };
  check(s.session_id >= 0, "session_id " + format_int(s.session_id) + " is negative");
  check(s.duration_s > 0, "duration_s " + format_double(s.duration_s) + " must be > 0");
  check(s.bitrate_mean_kbps > 0,
        "bitrate_mean_kbps " + format_double(s.bitrate_mean_kbps) + " must be > 0");
  check(s.bitrate_std_kbps >= 0,
        "bitrate_std_kbps " + format_double(s.bitrate_std_kbps) + " must be >= 0");
  check(s.vmaf_mean >= 0 && s.vmaf_mean <= 100,
        "vmaf_mean " + format_double(s.vmaf_mean) + " outside [0,100]");
  check(s.vmaf_std >= 0, "vmaf_std " + format_double(s.vmaf_std) + " must be >= 0");
  check(s.ssim_mean >= 0 && s.ssim_mean <= 1,
        "ssim_mean " + format_double(s.ssim_mean) + " outside [0,1]");
  check(s.qp_mean >= 0 && s.qp_mean <= 51, "qp_mean " + format_double(s.qp_mean) + " outside [0,51]");
  check(s.stall_duration_s >= 0,
        "stall_duration_s " + format_double(s.stall_duration_s) + " must be >= 0");
  check(s.stall_count >= 0, "stall_count " + format_int(s.stall_count) + " is negative");
  check(s.stall_count != 0 || s.stall_duration_s == 0,
        "stall_count is 0 but stall_duration_s is " + format_double(s.stall_duration_s));
  check(s.mos >= 0 && s.mos <= 100, "mos " + format_double(s.mos) + " outside [0,100]");
  return out;
}

Dataset::Dataset(std::vector<ColumnSpec> schema, std::vector<Record> rows, Provenance provenance)
    : schema_(std::move(schema)), rows_(std::move(rows)), provenance_(provenance) {
  validate_schema(schema_);
  has_demographic_ = find_column(kDemographicColumn) != nullptr;
  const std::size_t extras = static_cast<std::size_t>(std::count_if(
      schema_.begin(), schema_.end(), [](const ColumnSpec& c) { return !fixed_slot(c.name); }));

  std::string problems;
  std::size_t bad_rows = 0;
  std::unordered_set<std::int64_t> ids;
  std::set<std::int64_t> groups;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const Record& r = rows_[i];
    auto issues = session_violations(r.session);
    if (r.extra.size() != extras)
      issues.push_back("expected " + std::to_string(extras) + " meta values");
    if (r.demographic.has_value() != has_demographic_ ||
        r.base_session_id.has_value() != has_demographic_)
      issues.push_back("demographic/base_session_id presence does not match schema");
    if (r.base_session_id && *r.base_session_id < 0)
      issues.push_back("base_session_id is negative");
    if (!ids.insert(r.session.session_id).second)
      issues.push_back("duplicate session_id " + format_int(r.session.session_id));
    if (r.base_session_id) groups.insert(*r.base_session_id);
    if (!issues.empty()) {
      ++bad_rows;
      if (bad_rows <= 20) {
        problems += "\n  row " + std::to_string(i + 1) + ":";
        for (const auto& m : issues) problems += " " + m + ";";
      }
    }
  }
  if (bad_rows > 0) {
    if (bad_rows > 20) problems += "\n  ... and " + std::to_string(bad_rows - 20) + " more rows";
    fail(ErrorKind::validation,
         std::to_string(bad_rows) + " invalid row(s):" + problems);
  }
  if (provenance_.source == DataSource::augmented &&
      rows_.size() != kDemographicCount * groups.size())
    fail(ErrorKind::validation, "augmented dataset must have 6 rows per base session");
}

std::vector<ColumnSpec> Dataset::standard_schema(bool augmented) {
  auto schema = kSessionColumns;
  if (augmented) {
    schema.push_back({std::string(kDemographicColumn), ColumnKind::categorical});
    schema.push_back({std::string(kBaseSessionColumn), ColumnKind::group});
  }
  return schema;
}

const ColumnSpec* Dataset::find_column(std::string_view name) const {
  for (const auto& c : schema_)
    if (c.name == name) return &c;
  return nullptr;
}

std::int64_t Dataset::group_of(const Record& r) const {
  return r.base_session_id.value_or(r.session.session_id);
}

Dataset Dataset::with_rows(std::vector<Record> rows) const {
  Provenance p = provenance_;
  // A subset of an augmented set no longer satisfies the 6x cardinality
  // unless whole groups are kept; grouped splits keep it, iid splits do not.
  if (p.source == DataSource::augmented) {
    std::unordered_map<std::int64_t, std::size_t> counts;
    for (const auto& r : rows) ++counts[group_of(r)];
    bool whole = std::all_of(counts.begin(), counts.end(),
                             [](const auto& kv) { return kv.second == kDemographicCount; });
    if (!whole) p.source = DataSource::ingested;
  }
  return Dataset(schema_, std::move(rows), p);
}

std::uint64_t Dataset::content_hash() const { return fnv1a64(to_csv_string(*this)); }

double numeric_field(const Record& r, std::string_view column) {
  const auto& s = r.session;
  auto slot = fixed_slot(column);
  if (slot) {
    switch (*slot) {
      case kSessionId: return static_cast<double>(s.session_id);
      case kDuration: return s.duration_s;
      case kBitrateMean: return s.bitrate_mean_kbps;
      case kBitrateStd: return s.bitrate_std_kbps;
      case kVmafMean: return s.vmaf_mean;
      case kVmafStd: return s.vmaf_std;
      case kSsimMean: return s.ssim_mean;
      case kQpMean: return s.qp_mean;
      case kStallDuration: return s.stall_duration_s;
      case kStallCount: return static_cast<double>(s.stall_count);
      case kMos: return s.mos;
      case kBaseSessionSlot:
        if (r.base_session_id) return static_cast<double>(*r.base_session_id);
        break;
      default: break;
    }
  }
  fail(ErrorKind::schema_mismatch, "'" + std::string(column) + "' is not a numeric column");
}

const std::string& categorical_field(const Record& r, std::string_view column) {
  auto slot = fixed_slot(column);
  if (slot) {
    switch (*slot) {
      case kContentType: return r.session.content_type;
      case kDevice: return r.session.device;
      case kEncodingProfile: return r.session.encoding_profile;
      case kDemographicSlot:
        if (r.demographic) return *r.demographic;
        break;
      default: break;
    }
  }
  fail(ErrorKind::schema_mismatch, "'" + std::string(column) + "' is not a categorical column");
}

Dataset generate_base_dataset(std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorKind::invalid_argument, "generate_base_dataset: n must be >= 1");

  static const std::array<const char*, 4> kContent = {"sports", "movie", "news", "animation"};
  static const std::array<const char*, 4> kDevices = {"phone", "tablet", "tv", "desktop"};
  static const std::array<const char*, 4> kEncodings = {"h264_main", "h264_high", "hevc_main",
                                                        "vp9_profile0"};
  constexpr double kMinBitrate = 300.0;
  constexpr double kMaxBitrate = 20000.0;

  Rng rng(derive_seed(seed, tag_of("base-dataset")));
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> cv(0.02, 0.25);
  std::uniform_real_distribution<double> duration(30.0, 600.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::poisson_distribution<std::int64_t> stalls(0.6);
  std::exponential_distribution<double> stall_len(1.0 / 1.5);

  std::vector<Record> rows(n);
  std::vector<double> qp_noise(n);
  for (std::size_t i = 0; i < n; ++i) {
    StreamingSession& s = rows[i].session;
    s.session_id = static_cast<std::int64_t>(i);
    s.content_type = kContent[pick(rng)];
    s.device = kDevices[pick(rng)];
    s.encoding_profile = kEncodings[pick(rng)];
    s.duration_s = duration(rng);
    s.bitrate_mean_kbps = kMinBitrate * std::pow(kMaxBitrate / kMinBitrate, unit(rng));
    s.bitrate_std_kbps = s.bitrate_mean_kbps * cv(rng);
    // Floor at 1 rather than 0 keeps the coefficient of variation defined.
    s.vmaf_mean = std::clamp(
        100.0 * (1.0 - std::exp(-s.bitrate_mean_kbps / 4000.0)) + 3.0 * gauss(rng), 1.0, 100.0);
    s.vmaf_std = s.vmaf_mean * cv(rng);
    s.ssim_mean = std::clamp(0.5 + 0.005 * s.vmaf_mean + 0.02 * gauss(rng), 0.0, 1.0);
    s.stall_count = stalls(rng);
    const double one_stall = stall_len(rng);
    s.stall_duration_s = static_cast<double>(s.stall_count) * one_stall;
    qp_noise[i] = 2.0 * gauss(rng);
    const double mos_noise = 2.0 * gauss(rng);
    const ImpactFactors f = compute_impact_factors(s);
    s.mos = std::clamp(
        100.0 * f.quality_boost - 40.0 * f.rebuff_impact - 15.0 * f.quality_variance + mos_noise,
        0.0, 100.0);
  }

  // QP falls with the bitrate's rank in the corpus.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].session.bitrate_mean_kbps < rows[b].session.bitrate_mean_kbps;
  });
  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t i = order[rank];
    const double frac = n > 1 ? static_cast<double>(rank) / static_cast<double>(n - 1) : 0.5;
    rows[i].session.qp_mean = std::clamp(51.0 - 40.0 * frac + qp_noise[i], 0.0, 51.0);
  }

  return Dataset(Dataset::standard_schema(false), std::move(rows),
                 Provenance{DataSource::synthetic, seed, std::nullopt});
}

std::string to_csv_string(const Dataset& dataset) {
  const auto& schema = dataset.schema();
  const auto slots = slot_map(schema);
  std::string out;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (c) out.push_back(',');
    append_field(out, schema[c].name);
  }
  out.push_back('\n');
  for (const auto& r : dataset.rows()) {
    for (std::size_t c = 0; c < slots.size(); ++c) {
      if (c) out.push_back(',');
      append_field(out, cell_text(r, slots[c]));
    }
    out.push_back('\n');
  }
  return out;
}

Dataset parse_csv(std::string_view text, std::string_view origin) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  auto table = split_csv(text, origin);
  if (table.empty()) fail(ErrorKind::schema_mismatch, std::string(origin) + ": missing header row");

  std::vector<ColumnSpec> schema;
  for (const auto& name : table[0]) {
    auto slot = fixed_slot(name);
    if (!slot)
      schema.push_back({name, ColumnKind::meta});
    else if (*slot < kFixedSlots)
      schema.push_back(kSessionColumns[*slot]);
    else if (*slot == kDemographicSlot)
      schema.push_back({name, ColumnKind::categorical});
    else
      schema.push_back({name, ColumnKind::group});
  }
  validate_schema(schema);
  const auto slots = slot_map(schema);
  const bool augmented =
      std::find(slots.begin(), slots.end(), kDemographicSlot) != slots.end();
  const auto n_extra = static_cast<std::size_t>(
      std::count_if(slots.begin(), slots.end(), [](std::size_t s) { return s >= kFirstExtraSlot; }));

  std::vector<Record> rows;
  rows.reserve(table.size() - 1);
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& cells = table[i];
    if (cells.size() != schema.size())
      fail(ErrorKind::parse, std::string(origin) + ": row " + std::to_string(i) + " has " +
                                 std::to_string(cells.size()) + " fields, expected " +
                                 std::to_string(schema.size()));
    Record r;
    if (augmented) {
      r.demographic.emplace();
      r.base_session_id.emplace();
    }
    r.extra.resize(n_extra);
    auto& s = r.session;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      const std::string_view col = schema[c].name;
      switch (slots[c]) {
        case kSessionId: s.session_id = parse_number<std::int64_t>(cell, i, col); break;
        case kContentType: s.content_type = cell; break;
        case kDevice: s.device = cell; break;
        case kEncodingProfile: s.encoding_profile = cell; break;
        case kDuration: s.duration_s = parse_number<double>(cell, i, col); break;
        case kBitrateMean: s.bitrate_mean_kbps = parse_number<double>(cell, i, col); break;
        case kBitrateStd: s.bitrate_std_kbps = parse_number<double>(cell, i, col); break;
        case kVmafMean: s.vmaf_mean = parse_number<double>(cell, i, col); break;
        case kVmafStd: s.vmaf_std = parse_number<double>(cell, i, col); break;
        case kSsimMean: s.ssim_mean = parse_number<double>(cell, i, col); break;
        case kQpMean: s.qp_mean = parse_number<double>(cell, i, col); break;
        case kStallDuration: s.stall_duration_s = parse_number<double>(cell, i, col); break;
        case kStallCount: s.stall_count = parse_number<std::int64_t>(cell, i, col); break;
        case kMos: s.mos = parse_number<double>(cell, i, col); break;
        case kDemographicSlot: r.demographic = cell; break;
        case kBaseSessionSlot:
          r.base_session_id = parse_number<std::int64_t>(cell, i, col);
          break;
        default: r.extra.at(slots[c] - kFirstExtraSlot) = cell;
      }
    }
    rows.push_back(std::move(r));
  }
  return Dataset(std::move(schema), std::move(rows),
                 Provenance{DataSource::ingested, std::nullopt, std::nullopt});
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "error reading '" + path.string() + "'");
  return parse_csv(buf.str(), path.string());
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  if (dataset.empty()) fail(ErrorKind::invalid_argument, "write_csv: dataset is empty");
  const std::string text = to_csv_string(dataset);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) fail(ErrorKind::io, "error writing '" + path.string() + "'");
}

}  // namespace qoe
