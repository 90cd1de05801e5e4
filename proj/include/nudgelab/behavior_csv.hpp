#pragma once

// Behavior CSV: subject_id,treatment,trial_index,x_1..x_n,ai_rec,ai_conf,
// exp_mask,initial_decision,final_decision,crt_score. exp_mask is an
// n-character 0/1 string; absent optionals are empty fields. Lines starting
// with '#' are comments.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nudgelab/types.hpp"

namespace nudgelab {

std::string behavior_csv_header(std::size_t n_features);

/// Shortest decimal form that round-trips exactly.
std::string format_double(double value);

void write_behavior_csv(std::ostream& out, std::span<const BehaviorRecord> records,
                        std::size_t n_features,
                        const std::optional<std::string>& fingerprint = std::nullopt);

struct IngestResult {
  std::vector<BehaviorRecord> records;
  std::size_t n_features = 0;
  /// "line L, column C: message" for every rejected row.
  std::vector<std::string> errors;
};

/// Parses and validates. Throws a validation error on schema problems, or on
/// any invalid row unless `skip_invalid`.
IngestResult ingest(std::istream& in, bool skip_invalid = false);
IngestResult ingest(const std::filesystem::path& path, bool skip_invalid = false);

}  // namespace nudgelab
