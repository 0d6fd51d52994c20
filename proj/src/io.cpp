#include "semicomp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "semicomp/errors.hpp"

namespace semicomp {

namespace {

[[noreturn]] void parse_error(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

// Next non-comment, non-blank line; tracks the 1-based line number.
bool next_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    line = t;
    return true;
  }
  return false;
}

int infer_k(const std::vector<std::string>& header, std::size_t line) {
  // id, t1..tK, d1..dK, y, dtilde
  if (header.size() < 5 || (header.size() - 3) % 2 != 0) parse_error(line, "unexpected header width");
  const int K = static_cast<int>((header.size() - 3) / 2);
  if (header[0] != "id") parse_error(line, "first column must be 'id'");
  for (int k = 0; k < K; ++k) {
    if (header[1 + k] != "t" + std::to_string(k + 1)) parse_error(line, "expected column t" + std::to_string(k + 1));
    if (header[1 + K + k] != "d" + std::to_string(k + 1))
      parse_error(line, "expected column d" + std::to_string(k + 1));
  }
  if (header[1 + 2 * K] != "y" || header[2 + 2 * K] != "dtilde") parse_error(line, "expected columns y, dtilde");
  return K;
}

int parse_indicator(const std::string& s, std::size_t line, const std::string& col) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  parse_error(line, col + " must be 0 or 1");
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::Config, key + ": expected true or false");
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, const std::string& what) {
  double x = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  const auto r = std::from_chars(b, e, x);
  if (s.empty() || r.ec != std::errc() || r.ptr != e) throw Error(ErrorCode::Parse, what + ": not a number '" + s + "'");
  return x;
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno)) throw Error(ErrorCode::Parse, "empty data file");
  const auto header = split(line, ',');
  const std::size_t header_line = lineno;
  Dataset data;
  data.K = infer_k(header, header_line);
  const int K = data.K;
  while (next_line(in, line, lineno)) {
    const auto f = split(line, ',');
    if (f.size() != header.size()) parse_error(lineno, "expected " + std::to_string(header.size()) + " fields");
    ObservedRecord r;
    r.id = f[0];
    r.t.resize(K);
    r.delta.resize(K);
    try {
      for (int k = 0; k < K; ++k) {
        r.t[k] = parse_double(f[1 + k], header[1 + k]);
        r.delta[k] = parse_indicator(f[1 + K + k], lineno, header[1 + K + k]);
      }
      r.y = parse_double(f[1 + 2 * K], "y");
      r.dtilde = parse_indicator(f[2 + 2 * K], lineno, "dtilde");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Parse) throw;
      const std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      parse_error(lineno, msg);
    }
    data.records.push_back(std::move(r));
  }
  try {
    validate_dataset(data);
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, std::string("data file: ") + e.what());
  }
  return data;
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open " + path);
  return read_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  const int K = data.K;
  out << "id";
  for (int k = 1; k <= K; ++k) out << ",t" << k;
  for (int k = 1; k <= K; ++k) out << ",d" << k;
  out << ",y,dtilde\n";
  for (const auto& r : data.records) {
    out << r.id;
    for (int k = 0; k < K; ++k) out << ',' << format_double(r.t[k]);
    for (int k = 0; k < K; ++k) out << ',' << r.delta[k];
    out << ',' << format_double(r.y) << ',' << r.dtilde << '\n';
  }
}

void write_latent(std::ostream& out, const Dataset& data, const LatentTruth& lt) {
  out << "id,D,C";
  for (int k = 1; k <= data.K; ++k) out << ",T" << k;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.records[i].id << ',' << format_double(lt.d[i]) << ',' << format_double(lt.c[i]);
    for (double t : lt.t[i]) {
      out << ',';
      if (std::isfinite(t)) out << format_double(t);
    }
    out << '\n';
  }
}

std::vector<double> read_latent_death(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno)) throw Error(ErrorCode::Parse, "empty latent file");
  const auto header = split(line, ',');
  if (header.size() < 2 || header[0] != "id" || header[1] != "D") parse_error(lineno, "expected columns id, D");
  std::vector<double> d;
  while (next_line(in, line, lineno)) {
    const auto f = split(line, ',');
    if (f.size() < 2) parse_error(lineno, "missing D");
    try {
      d.push_back(parse_double(f[1], "D"));
    } catch (const Error& e) {
      parse_error(lineno, e.what());
    }
  }
  return d;
}

std::vector<QueryRow> read_queries(std::istream& in, int K) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno)) throw Error(ErrorCode::Parse, "empty query file");
  const auto header = split(line, ',');
  if (header.size() != static_cast<std::size_t>(K) + 1 || header[0] != "id")
    parse_error(lineno, "expected columns id, t1..t" + std::to_string(K));
  std::vector<QueryRow> rows;
  while (next_line(in, line, lineno)) {
    auto f = split(line, ',');
    if (f.size() == 1 && K > 0) f.resize(K + 1);  // id only: nothing observed
    if (f.size() != header.size()) parse_error(lineno, "expected " + std::to_string(header.size()) + " fields");
    QueryRow q;
    q.id = f[0];
    for (int k = 0; k < K; ++k) {
      if (f[1 + k].empty()) continue;
      try {
        q.query.events.emplace_back(k, parse_double(f[1 + k], header[1 + k]));
      } catch (const Error& e) {
        parse_error(lineno, e.what());
      }
    }
    try {
      q.query.validate(K);
    } catch (const Error& e) {
      parse_error(lineno, e.what());
    }
    rows.push_back(std::move(q));
  }
  return rows;
}

std::vector<std::string> config_keys() {
  return {"family",          "weight",           "weight.a",         "weight.b",        "theta.tau_lo",
          "theta.tau_hi",    "theta.allow_negative", "theta.tol",    "sc.tol",          "sc.max_iter",
          "alpha.tau_lo",    "alpha.tau_hi",     "alpha.tol",        "alpha.grid",      "mc.mode",
          "mc.n",            "mc.seed",          "bootstrap.B",      "bootstrap.seed",  "metric.t_star",
          "metric.qpe_level", "metric.grid",     "metric.ipcw",      "metric.tail",     "metric.interval_level",
          "sim.preset",      "sim.K",            "sim.family",       "sim.tau_alpha",   "sim.tau_thetas",
          "sim.tau_lower",   "sim.rate_k",       "sim.rate_d",       "sim.cens_max",    "sim.n_train",
          "sim.n_test",      "sim.seed",         "cv.scheme",        "cv.folds",        "cv.test_fraction",
          "cv.repeats",      "cv.seed",          "threads"};
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  const auto keys = config_keys();
  std::vector<std::pair<std::string, std::string>> entries;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw Error(ErrorCode::Config, key + ": unknown key (line " + std::to_string(lineno) + ")");
    if (c.raw.count(key)) throw Error(ErrorCode::Config, key + ": given twice");
    c.raw[key] = val;
    entries.emplace_back(key, val);
  }

  // Presets first so individual sim keys can override them.
  if (c.raw.count("sim.preset")) {
    const std::string p = c.raw["sim.preset"];
    const int K = c.raw.count("sim.K") ? static_cast<int>(parse_double(c.raw["sim.K"], "sim.K")) : 3;
    if (p == "ex1") {
      c.sim = preset_ex1(K, 0.2, 5.0);
      c.sim.n_test = 50;
    } else if (p == "ex2") {
      c.sim = preset_ex2(K, 0.5, 20.0);
      c.sim.n_train = 200;
    } else if (p == "ex3") c.sim = preset_ex3(0.5, 0.5);
    else throw Error(ErrorCode::Config, "sim.preset: expected ex1, ex2 or ex3");
  }

  for (const auto& [key, val] : entries) {
    auto num = [&] {
      try {
        return parse_double(val, key);
      } catch (const Error&) {
        throw Error(ErrorCode::Config, key + ": not a number '" + val + "'");
      }
    };
    auto integer = [&] {
      const double x = num();
      if (x != std::floor(x)) throw Error(ErrorCode::Config, key + ": expected an integer");
      return static_cast<long long>(x);
    };
    auto seed = [&] {
      std::uint64_t s = 0;
      const auto r = std::from_chars(val.data(), val.data() + val.size(), s);
      if (val.empty() || r.ec != std::errc() || r.ptr != val.data() + val.size())
        throw Error(ErrorCode::Config, key + ": expected a non-negative integer");
      return s;
    };
    if (key == "family") c.fit.family = parse_family(val);
    else if (key == "weight") {
      if (val == "unit") c.fit.weight.kind = WeightKind::Unit;
      else if (val == "dampened") c.fit.weight.kind = WeightKind::Dampened;
      else throw Error(ErrorCode::Config, "weight: expected unit or dampened");
    } else if (key == "weight.a") c.fit.weight.a = num();
    else if (key == "weight.b") c.fit.weight.b = num();
    else if (key == "theta.tau_lo") c.fit.theta.tau_lo = num();
    else if (key == "theta.tau_hi") c.fit.theta.tau_hi = num();
    else if (key == "theta.allow_negative") c.fit.theta.allow_negative = parse_bool(val, key);
    else if (key == "theta.tol") c.fit.theta.tol = num();
    else if (key == "sc.tol") c.fit.self_consistency.tol = num();
    else if (key == "sc.max_iter") c.fit.self_consistency.max_iter = static_cast<int>(integer());
    else if (key == "alpha.tau_lo") c.fit.alpha.tau_lo = num();
    else if (key == "alpha.tau_hi") c.fit.alpha.tau_hi = num();
    else if (key == "alpha.tol") c.fit.alpha.tol = num();
    else if (key == "alpha.grid") c.fit.alpha.grid_points = static_cast<int>(integer());
    else if (key == "mc.mode") {
      if (val == "exact") c.fit.mc.mode = InnerMode::Exact;
      else if (val == "montecarlo") c.fit.mc.mode = InnerMode::MonteCarlo;
      else throw Error(ErrorCode::Config, "mc.mode: expected exact or montecarlo");
    } else if (key == "mc.n") c.fit.mc.n = static_cast<int>(integer());
    else if (key == "mc.seed") c.fit.mc.seed = seed();
    else if (key == "bootstrap.B") c.bootstrap.B = static_cast<int>(integer());
    else if (key == "bootstrap.seed") c.bootstrap.seed = seed();
    else if (key == "metric.t_star") c.metric.t_star = num();
    else if (key == "metric.qpe_level") c.metric.qpe_level = num();
    else if (key == "metric.grid") c.metric.grid_points = static_cast<int>(integer());
    else if (key == "metric.ipcw") c.metric.ipcw = parse_bool(val, key);
    else if (key == "metric.tail") {
      if (val == "zero") c.metric.tail = MetricConfig::Tail::Zero;
      else if (val == "flat") c.metric.tail = MetricConfig::Tail::Flat;
      else throw Error(ErrorCode::Config, "metric.tail: expected zero or flat");
    } else if (key == "metric.interval_level") c.metric.interval_level = num();
    else if (key == "sim.preset") {
      // handled above
    } else if (key == "sim.K") {
      c.sim.K = static_cast<int>(integer());
      if (!c.raw.count("sim.preset") && !c.raw.count("sim.tau_thetas")) c.sim.tau_thetas.assign(c.sim.K, 0.5);
    } else if (key == "sim.family") c.sim.family = parse_family(val);
    else if (key == "sim.tau_alpha") c.sim.tau_alpha = num();
    else if (key == "sim.tau_thetas") {
      c.sim.tau_thetas.clear();
      for (const auto& part : split(val, ',')) {
        try {
          c.sim.tau_thetas.push_back(parse_double(part, key));
        } catch (const Error&) {
          throw Error(ErrorCode::Config, key + ": not a number list '" + val + "'");
        }
      }
    } else if (key == "sim.tau_lower") c.sim.tau_lower = num();
    else if (key == "sim.rate_k") c.sim.rate_k = num();
    else if (key == "sim.rate_d") c.sim.rate_d = num();
    else if (key == "sim.cens_max") c.sim.cens_max = num();
    else if (key == "sim.n_train") c.sim.n_train = static_cast<int>(integer());
    else if (key == "sim.n_test") c.sim.n_test = static_cast<int>(integer());
    else if (key == "sim.seed") c.sim.seed = seed();
    else if (key == "cv.scheme") {
      if (val == "kfold") c.cv.kind = CvScheme::Kind::KFold;
      else if (val == "random") c.cv.kind = CvScheme::Kind::Random;
      else throw Error(ErrorCode::Config, "cv.scheme: expected kfold or random");
    } else if (key == "cv.folds") c.cv.folds = static_cast<int>(integer());
    else if (key == "cv.test_fraction") c.cv.test_fraction = num();
    else if (key == "cv.repeats") c.cv.repeats = static_cast<int>(integer());
    else if (key == "cv.seed") c.cv.seed = seed();
    else if (key == "threads") c.fit.threads = static_cast<int>(integer());
  }
  if (c.sim.tau_thetas.empty()) c.sim.tau_thetas.assign(c.sim.K, 0.5);
  return c;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig read_config_file(const std::string& path) { return parse_config(read_text_file(path)); }

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [k, v] : cfg.raw) feed(k + "=" + v + "\n");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string provenance_line(const std::string& command, std::uint64_t seed, const RunConfig& cfg) {
  return "# semicomp " + command + " version=" + kVersion + " seed=" + std::to_string(seed) +
         " config=" + config_hash(cfg);
}

}  // namespace semicomp
