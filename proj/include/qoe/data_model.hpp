#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qoe {

// One HTTP adaptive streaming session: precomputed objective metrics plus the
// subjective score on a 0..100 scale.
struct StreamingSession {
  std::int64_t session_id = 0;
  std::string content_type;
  std::string device;
  std::string encoding_profile;
  double duration_s = 0.0;
  double bitrate_mean_kbps = 0.0;
  double bitrate_std_kbps = 0.0;
  double vmaf_mean = 0.0;
  double vmaf_std = 0.0;
  double ssim_mean = 0.0;
  double qp_mean = 0.0;
  double stall_duration_s = 0.0;
  std::int64_t stall_count = 0;
  double mos = 0.0;

  friend bool operator==(const StreamingSession&, const StreamingSession&) = default;
};

// Human-readable list of violated session invariants; empty when valid.
std::vector<std::string> session_violations(const StreamingSession& s);

enum class ColumnKind { numeric, categorical, target, group, meta };

std::string_view to_string(ColumnKind kind);

struct ColumnSpec {
  std::string name;
  ColumnKind kind;

  friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

// Fixed session columns, in CSV order.
const std::vector<ColumnSpec>& session_columns();
// The two columns appended by augmentation.
inline constexpr std::string_view kDemographicColumn = "demographic";
inline constexpr std::string_view kBaseSessionColumn = "base_session_id";
inline constexpr std::string_view kTargetColumn = "mos";

struct Record {
  StreamingSession session;
  std::optional<std::string> demographic;
  std::optional<std::int64_t> base_session_id;
  // Values of pass-through meta columns, in schema order.
  std::vector<std::string> extra;

  friend bool operator==(const Record&, const Record&) = default;
};

enum class DataSource { synthetic, ingested, augmented };

std::string_view to_string(DataSource source);

struct Provenance {
  DataSource source = DataSource::synthetic;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> parent_hash;
};

// Immutable, validated collection of records with its column schema.
class Dataset {
 public:
  // Validates schema shape and per-row invariants; throws qoe::Error.
  Dataset(std::vector<ColumnSpec> schema, std::vector<Record> rows, Provenance provenance);

  // Schema for a plain or augmented dataset without extra meta columns.
  static std::vector<ColumnSpec> standard_schema(bool augmented);

  const std::vector<ColumnSpec>& schema() const noexcept { return schema_; }
  const std::vector<Record>& rows() const noexcept { return rows_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  bool has_demographic() const noexcept { return has_demographic_; }

  const ColumnSpec* find_column(std::string_view name) const;

  // Group key used by grouped splitting: base_session_id when present,
  // otherwise session_id.
  std::int64_t group_of(const Record& r) const;

  // Same schema and provenance, different rows (used by split).
  Dataset with_rows(std::vector<Record> rows) const;

  // FNV-1a hash of the canonical CSV emission.
  std::uint64_t content_hash() const;

 private:
  std::vector<ColumnSpec> schema_;
  std::vector<Record> rows_;
  Provenance provenance_;
  bool has_demographic_ = false;
};

// Numeric value of a session column by name (numeric, target and integer
// columns). Throws schema-mismatch for non-numeric names.
double numeric_field(const Record& r, std::string_view column);
// Label of a categorical column by name (including "demographic").
const std::string& categorical_field(const Record& r, std::string_view column);

// Synthetic stand-in for a measured session corpus. Pure in (n, seed).
Dataset generate_base_dataset(std::size_t n, std::uint64_t seed);

std::string to_csv_string(const Dataset& dataset);
Dataset parse_csv(std::string_view text, std::string_view origin = "<memory>");

Dataset read_csv(const std::filesystem::path& path);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace qoe
