#pragma once

// Evidence log: JSON lines. The first line is a header describing the probe
// grid; every other line is one TrialResult. A truncated final line (a run
// killed mid-write) is ignored on read.

#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmaudit/error.hpp"
#include "wmaudit/verify/metrics.hpp"

namespace wmaudit {

struct TrialLogHeader {
  int version = 1;
  std::string method;
  std::size_t k = 5;
  std::size_t n_wm = 0;
  std::size_t n_ds = 0;
  std::size_t grid_cells = 0;
  std::size_t repetitions = 1;
  std::string config_fingerprint;
  std::uint64_t seed = 0;

  friend bool operator==(const TrialLogHeader&, const TrialLogHeader&) = default;
};

struct TrialLog {
  TrialLogHeader header;
  std::vector<TrialResult> trials;
};

inline nlohmann::json to_json(const TrialLogHeader& h) {
  return {{"kind", "header"},       {"version", h.version}, {"method", h.method},
          {"k", h.k},               {"n_wm", h.n_wm},       {"n_ds", h.n_ds},
          {"grid_cells", h.grid_cells}, {"repetitions", h.repetitions},
          {"config_fingerprint", h.config_fingerprint}, {"seed", h.seed}};
}

inline nlohmann::json to_json(const TrialResult& t) {
  return {{"spec_id", t.spec_id},
          {"probe_index", t.probe_index},
          {"repetition", t.repetition},
          {"retrieved_ids", t.retrieved_ids},
          {"rank", t.rank},
          {"output_text", t.output_text},
          {"eval_bit", t.eval_bit},
          {"error", t.error ? nlohmann::json(*t.error) : nlohmann::json(nullptr)},
          {"timestamp", t.timestamp}};
}

inline TrialResult trial_from_json(const nlohmann::json& j) {
  TrialResult t;
  t.spec_id = j.at("spec_id").get<std::string>();
  t.probe_index = j.at("probe_index").get<int>();
  t.repetition = j.value("repetition", 0);
  t.retrieved_ids = j.at("retrieved_ids").get<std::vector<std::string>>();
  t.rank = j.at("rank").get<int>();
  t.output_text = j.at("output_text").get<std::string>();
  t.eval_bit = j.at("eval_bit").get<int>();
  if (t.eval_bit != 0 && t.eval_bit != 1) fail(ErrorKind::parse, "eval_bit must be 0 or 1");
  if (j.contains("error") && !j["error"].is_null()) t.error = j["error"].get<std::string>();
  t.timestamp = j.value("timestamp", std::string{});
  return t;
}

inline TrialLogHeader header_from_json(const nlohmann::json& j) {
  TrialLogHeader h;
  h.version = j.at("version").get<int>();
  h.method = j.value("method", std::string{});
  h.k = j.at("k").get<std::size_t>();
  h.n_wm = j.at("n_wm").get<std::size_t>();
  h.n_ds = j.at("n_ds").get<std::size_t>();
  h.grid_cells = j.at("grid_cells").get<std::size_t>();
  h.repetitions = j.value("repetitions", std::size_t{1});
  h.config_fingerprint = j.value("config_fingerprint", std::string{});
  h.seed = j.value("seed", std::uint64_t{0});
  return h;
}

inline TrialLog read_trial_log(std::istream& in) {
  TrialLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    bool complete = !in.eof();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      if (!complete) break;  // torn final write
      fail(ErrorKind::parse, "trial log line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (j.value("kind", std::string{}) == "header") {
        log.header = header_from_json(j);
        have_header = true;
      } else {
        log.trials.push_back(trial_from_json(j));
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, "trial log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::parse, "trial log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) fail(ErrorKind::parse, "trial log has no header line");
  return log;
}

inline TrialLog load_trial_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open trial log '" + path.string() + "'");
  return read_trial_log(in);
}

/// Append-only, flushed per record. Safe to share across worker threads.
class TrialLogWriter {
 public:
  TrialLogWriter(const std::filesystem::path& path, const TrialLogHeader& header)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    out_ << to_json(header).dump() << '\n' << std::flush;
  }

  void append(const TrialResult& t) {
    std::lock_guard lock(mu_);
    out_ << to_json(t).dump() << '\n' << std::flush;
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace wmaudit
