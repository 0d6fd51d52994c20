#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "semicomp/evaluation.hpp"
#include "semicomp/model.hpp"
#include "semicomp/simulation.hpp"

namespace semicomp {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest decimal that reads back to the same double.
std::string format_double(double x);
double parse_double(const std::string& s, const std::string& what);

/// Data CSV: id, t1..tK, d1..dK, y, dtilde. Lines starting with '#' are skipped.
/// Errors name the 1-based line number.
Dataset read_dataset(std::istream& in);
Dataset read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& data);

/// Latent CSV: id, D, C, T1..TK; times past the bracket are written empty.
void write_latent(std::ostream& out, const Dataset& data, const LatentTruth& lt);
/// Reads the D column of a latent file, in row order.
std::vector<double> read_latent_death(std::istream& in);

struct QueryRow {
  std::string id;
  PredictionQuery query;
};
/// Query CSV: id, t1..tK with empty cells for unobserved events.
std::vector<QueryRow> read_queries(std::istream& in, int K);

/// Key-value configuration. One "key = value" per line; '#' starts a comment.
struct RunConfig {
  FitConfig fit;
  BootstrapOptions bootstrap;
  MetricConfig metric;
  SimConfig sim;
  CvScheme cv;
  std::map<std::string, std::string> raw;  // keys as given, for hashing
};

RunConfig parse_config(const std::string& text);
RunConfig read_config_file(const std::string& path);
std::vector<std::string> config_keys();

/// 64-bit FNV-1a of the sorted key=value pairs, hex encoded.
std::string config_hash(const RunConfig& cfg);

/// "# semicomp <command> version=... seed=... config=..."
std::string provenance_line(const std::string& command, std::uint64_t seed, const RunConfig& cfg);

std::string read_text_file(const std::string& path);

}  // namespace semicomp
