#include "nudgelab/behavior_csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "nudgelab/error.hpp"

namespace nudgelab {
namespace {

constexpr const char* kTrailing[] = {"ai_rec",         "ai_conf",        "exp_mask",
                                     "initial_decision", "final_decision", "crt_score"};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

struct RowError {
  std::string column;
  std::string message;
};

int parse_int(const std::string& s, const std::string& column) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw RowError{column, "expected an integer, got '" + s + "'"};
  return v;
}

double parse_double(const std::string& s, const std::string& column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw RowError{column, "expected a finite number, got '" + s + "'"};
  }
  return v;
}

int parse_binary(const std::string& s, const std::string& column) {
  const int v = parse_int(s, column);
  if (v != 0 && v != 1) throw RowError{column, "expected 0 or 1, got '" + s + "'"};
  return v;
}

void require_field(bool present, const char* column, Treatment t) {
  if (!present) {
    throw RowError{column, std::string(to_string(t)) + " treatment requires " + column};
  }
}

void forbid_field(bool present, const char* column, Treatment t) {
  if (present) {
    throw RowError{column, std::string(to_string(t)) + " treatment must leave " + column + " empty"};
  }
}

BehaviorRecord parse_row(const std::vector<std::string>& f, std::size_t n) {
  BehaviorRecord r;
  if (f[0].empty()) throw RowError{"subject_id", "subject_id is empty"};
  r.subject_id = f[0];
  try {
    r.treatment = parse_treatment(f[1]);
  } catch (const Error& e) {
    throw RowError{"treatment", e.what()};
  }
  r.trial_index = parse_int(f[2], "trial_index");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string col = "x_" + std::to_string(i + 1);
    const double x = parse_double(f[3 + i], col);
    if (x < 0.0 || x > 1.0) throw RowError{col, "feature " + format_double(x) + " outside [0,1]"};
    r.features.push_back(x);
  }
  const auto& rec = f[3 + n];
  const auto& conf = f[4 + n];
  const auto& mask = f[5 + n];
  const auto& initial = f[6 + n];
  const auto& final_decision = f[7 + n];
  const auto& crt = f[8 + n];
  if (!rec.empty()) r.ai_recommendation = parse_binary(rec, "ai_rec");
  if (!conf.empty()) {
    const double c = parse_double(conf, "ai_conf");
    if (c < 0.5 || c > 1.0) throw RowError{"ai_conf", "confidence " + conf + " outside [0.5,1]"};
    r.ai_confidence = c;
  }
  if (!mask.empty()) {
    if (mask.size() != n) throw RowError{"exp_mask", "mask must have " + std::to_string(n) + " characters"};
    std::vector<int> e;
    for (char c : mask) {
      if (c != '0' && c != '1') throw RowError{"exp_mask", "mask characters must be 0 or 1"};
      e.push_back(c - '0');
    }
    r.explanation_mask = std::move(e);
  }
  if (!initial.empty()) r.initial_decision = parse_binary(initial, "initial_decision");
  if (final_decision.empty()) throw RowError{"final_decision", "final_decision is required"};
  r.final_decision = parse_binary(final_decision, "final_decision");
  if (!crt.empty()) {
    const int c = parse_int(crt, "crt_score");
    if (c < 0 || c > 3) throw RowError{"crt_score", "CRT score must lie in 0..3"};
    r.crt_score = c;
  }

  const Treatment t = r.treatment;
  const bool has_rec = r.ai_recommendation.has_value();
  const bool has_conf = r.ai_confidence.has_value();
  const bool has_mask = r.explanation_mask.has_value();
  const bool has_init = r.initial_decision.has_value();
  switch (t) {
    case Treatment::independent:
      forbid_field(has_rec, "ai_rec", t);
      forbid_field(has_conf, "ai_conf", t);
      forbid_field(has_mask, "exp_mask", t);
      forbid_field(has_init, "initial_decision", t);
      break;
    case Treatment::immediate:
      require_field(has_rec, "ai_rec", t);
      require_field(has_conf, "ai_conf", t);
      forbid_field(has_mask, "exp_mask", t);
      forbid_field(has_init, "initial_decision", t);
      break;
    case Treatment::delayed:
      require_field(has_rec, "ai_rec", t);
      require_field(has_init, "initial_decision", t);
      forbid_field(has_conf, "ai_conf", t);
      forbid_field(has_mask, "exp_mask", t);
      break;
    case Treatment::explanation:
      require_field(has_mask, "exp_mask", t);
      forbid_field(has_rec, "ai_rec", t);
      forbid_field(has_conf, "ai_conf", t);
      forbid_field(has_init, "initial_decision", t);
      break;
  }
  return r;
}

}  // namespace

std::string behavior_csv_header(std::size_t n_features) {
  std::string h = "subject_id,treatment,trial_index";
  for (std::size_t i = 0; i < n_features; ++i) h += ",x_" + std::to_string(i + 1);
  for (const char* c : kTrailing) h += std::string(",") + c;
  return h;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_behavior_csv(std::ostream& out, std::span<const BehaviorRecord> records,
                        std::size_t n_features, const std::optional<std::string>& fingerprint) {
  if (fingerprint) out << "# config_fingerprint=" << *fingerprint << '\n';
  out << behavior_csv_header(n_features) << '\n';
  for (const auto& r : records) {
    require(r.features.size() == n_features, ErrorKind::config, "record feature width mismatch");
    out << r.subject_id << ',' << to_string(r.treatment) << ',' << r.trial_index;
    for (double x : r.features) out << ',' << format_double(x);
    out << ',';
    if (r.ai_recommendation) out << *r.ai_recommendation;
    out << ',';
    if (r.ai_confidence) out << format_double(*r.ai_confidence);
    out << ',';
    if (r.explanation_mask) {
      for (int e : *r.explanation_mask) out << (e ? '1' : '0');
    }
    out << ',';
    if (r.initial_decision) out << *r.initial_decision;
    out << ',' << r.final_decision << ',';
    if (r.crt_score) out << *r.crt_score;
    out << '\n';
  }
}

IngestResult ingest(std::istream& in, bool skip_invalid) {
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    header = split_fields(line);
    break;
  }
  require(!header.empty(), ErrorKind::validation, "schema error: missing header row");

  auto schema_error = [](const std::string& msg) { fail(ErrorKind::validation, "schema error: " + msg); };
  const char* leading[] = {"subject_id", "treatment", "trial_index"};
  for (std::size_t i = 0; i < 3; ++i) {
    if (header.size() <= i || header[i] != leading[i]) {
      schema_error(std::string("missing required column '") + leading[i] + "'");
    }
  }
  std::size_t n = 0;
  while (3 + n < header.size() && header[3 + n] == "x_" + std::to_string(n + 1)) ++n;
  if (n == 0) schema_error("missing feature columns x_1..x_n");
  for (std::size_t i = 0; i < 6; ++i) {
    if (header.size() <= 3 + n + i || header[3 + n + i] != kTrailing[i]) {
      schema_error(std::string("missing required column '") + kTrailing[i] + "'");
    }
  }
  if (header.size() != 9 + n) schema_error("unexpected extra columns");
  result.n_features = n;

  std::map<std::string, std::pair<std::optional<int>, std::size_t>> crt_seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    const auto fields = split_fields(line);
    try {
      if (fields.size() != header.size()) {
        throw RowError{"*", "expected " + std::to_string(header.size()) + " fields, found " +
                                std::to_string(fields.size())};
      }
      BehaviorRecord r = parse_row(fields, n);
      auto [it, inserted] = crt_seen.try_emplace(r.subject_id, r.crt_score, line_no);
      if (!inserted && it->second.first != r.crt_score) {
        throw RowError{"crt_score", "CRT score differs from line " + std::to_string(it->second.second) +
                                        " for subject " + r.subject_id};
      }
      result.records.push_back(std::move(r));
    } catch (const RowError& e) {
      result.errors.push_back("line " + std::to_string(line_no) + ", column " + e.column + ": " + e.message);
    }
  }
  if (!result.errors.empty() && !skip_invalid) {
    std::string msg = std::to_string(result.errors.size()) + " invalid row(s):";
    for (const auto& e : result.errors) msg += "\n  " + e;
    fail(ErrorKind::validation, msg);
  }
  return result;
}

IngestResult ingest(const std::filesystem::path& path, bool skip_invalid) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::usage, "cannot open data file: " + path.string());
  return ingest(in, skip_invalid);
}

}  // namespace nudgelab
